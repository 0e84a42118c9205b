# %% [markdown]
# Successor structures, branching programs and derivation surgery
# ===============================================================
#
# Over inputs carrying a linear order 1..n (first, last, suc), linear
# Datalog can count. Fixing n, a linear program compiles into a monotone
# nondeterministic branching program whose accepting paths follow
# derivations.

# %%
from cspbelow.datalog import accepts, evaluate
from cspbelow.fixtures import program
from cspbelow.structures import Structure, Vocabulary, digraph, maps_to
from cspbelow.succro import (SuccessorStructure, build_cut_decomposition, compile_to_mnbp, evaluate_mnbp,
                             local_minimality_report, minimize_in_class, occurrences, split,
                             surgery_experiment)

even = program("even-cliques")
for n in range(1, 7):
    clique = SuccessorStructure.from_facts(Vocabulary.of(E=2), [
        ("E", (str(x), str(y))) for x in range(1, n + 1) for y in range(1, n + 1)], n)
    bp = compile_to_mnbp(even, n)
    print(n, "interpreted", accepts(even, clique), "compiled", evaluate_mnbp(bp, clique).accepted,
          "states", bp.diagnostics["state_nodes"], "<=", bp.diagnostics["state_bound"])

# %%
# st-Conn at n = 4: the accepting path of the branching program reads each label once
st = program("st-conn")
a = SuccessorStructure.from_facts(Vocabulary.of(E=2, S=1, T=1),
                                  [("S", ("1",)), ("E", ("1", "3")), ("E", ("3", "2")), ("T", ("2",))], 4)
run = evaluate_mnbp(compile_to_mnbp(st, 4), a)
print(run.accepted, run.read_once, [arc.label for arc in run.path if arc.label])

# %% [markdown]
# Splitting an element moves some of its occurrences to a fresh copy.
# The result always maps back, so a class closed under homomorphisms can
# be shrunk by splits and removals until neither stays in the class.

# %%
loop = digraph([("a", "a")])
print(occurrences(loop, "a"))
print(split(loop, "a", [("E", ("a", "a"), 1)]).relation("E"))

edge = digraph([("0", "1")])
not_an_edge = lambda s: not maps_to(s, edge)
two_cycles = digraph([("a", "b"), ("b", "a"), ("c", "d"), ("d", "c")])
small = minimize_in_class(two_cycles, not_an_edge)
print("minimized to", sorted(small.relation("E")), "report", local_minimality_report(small, not_an_edge))

# %%
# Widening bags by what passes over them turns a (j,k) bag sequence into a (j,k+j) representation
bags = [digraph([("a", "b")]), digraph([("c", "d")]), digraph([("b", "d")])]
cut = build_cut_decomposition(bags, 2, 2)
print([b.domain for b in cut.representation.bags], cut.representation.params)
print(build_cut_decomposition([digraph([], "ab"), digraph([], "c"), digraph([], "ab")], 1, 2).violation)

# %% [markdown]
# Surgery: derive the same small structure m at many positions of 1..n,
# cut two derivations at a shared state and glue them. The glued
# derivation is still valid and its extracted structure is accepted.

# %%
m = Structure(Vocabulary.of(S=1, T=1), ["a"], {"S": [("a",)], "T": [("a",)]})
p = program("s-and-t")
trace = surgery_experiment(p, m, 3)
print("valid", trace.valid, "accepted", trace.accepted, "split variant", trace.split_variant)
print("extracted", sorted(trace.extracted.facts()))
print("prototype cut violated at g =", trace.prototype_cut.violation)
print("still accepted:", evaluate(p, trace.extracted).accepted)
