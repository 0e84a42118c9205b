# %% [markdown]
# Structures, homomorphisms and Datalog derivations
# =================================================
#
# A tiny tour: build digraphs, look for homomorphisms, compute a core,
# then run the reachability programs and inspect the derivations they
# produce.

# %%
from cspbelow.structures import Structure, Vocabulary, core_of, digraph, find_homomorphism, is_core, maps_to
from cspbelow.datalog import classify_fragment, derivation_properties, evaluate, validate_derivation
from cspbelow.fixtures import program

# %%
# A directed 6-cycle maps onto a directed 3-cycle by winding twice around it
c6 = digraph([(str(i), str((i + 1) % 6)) for i in range(6)])
c3 = digraph([(str(i), str((i + 1) % 3)) for i in range(3)])
h = find_homomorphism(c6, c3)
print("C6 -> C3:", dict(sorted(h.mapping.items())), h.is_valid())
print("C3 -> C6:", maps_to(c3, c6))

# %%
# The symmetric closure of a path retracts onto a single symmetric edge
path = digraph([("a", "b"), ("b", "a"), ("b", "c"), ("c", "b"), ("c", "d"), ("d", "c")])
core, retraction = core_of(path)
print("core size", core.size, "is core:", is_core(core), "retraction", retraction.mapping)

# %% [markdown]
# Directed reachability as linear Datalog. Accepted inputs come with a
# derivation: a chain of instantiated rules that validates on its own.

# %%
st = program("st-conn")
print(classify_fragment(st))
graph = Structure(Vocabulary.of(E=2, S=1, T=1), "abcd",
                  {"E": [("a", "b"), ("c", "b"), ("c", "d")], "S": [("a",)], "T": [("d",)]})
print("directed:", evaluate(st, graph).accepted)

sym = program("symmetric-reachability")
result = evaluate(sym, graph)
print("ignoring orientation:", result.accepted, classify_fragment(sym).fragment)
for step in result.witness.steps:
    print("  ", sym.rules[step.rule], dict(sorted(step.assignment.items())))
print("validates:", validate_derivation(sym, result.witness)[0])
print("read-once:", derivation_properties(sym, result.witness).read_once)
