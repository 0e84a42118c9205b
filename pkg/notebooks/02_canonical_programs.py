# %% [markdown]
# Canonical programs as one-sided certificates
# ============================================
#
# The canonical (j,k) program of a template B collects every valid rule
# over relations of arity at most j on B. Whenever it accepts an input A,
# A has no homomorphism to B. Width matters: odd cycles against a single
# symmetric edge need binary IDBs.

# %%
from cspbelow.canonical import build_canonical, canonical_accept
from cspbelow.structures import Structure, Vocabulary, digraph, maps_to

k2 = digraph([("0", "1"), ("1", "0")])
c3 = digraph([("a", "b"), ("b", "c"), ("c", "a")])
print("C3 -> K2:", maps_to(c3, k2))

# %%
for j, k in [(1, 2), (2, 3)]:
    r = canonical_accept(k2, j, k, "linear", c3)
    print(f"(j,k)=({j},{k}) accepts={r.accepted} states explored={r.states_explored}")

# %% [markdown]
# The explicit program can be materialized for small templates. Here is
# the (1,2) program of the order 0 <= 1 with unary markers S and T.

# %%
vocab = Vocabulary.of(R=2, S=1, T=1)
leq = Structure.from_facts(vocab, [("R", ("0", "0")), ("R", ("0", "1")), ("R", ("1", "1")),
                                   ("S", ("0",)), ("T", ("1",))])
for mode in ("linear", "symmetric"):
    cp = build_canonical(leq, 1, 2, mode)
    print(mode, "rules:", len(cp.base.rules), "IDBs:", sorted(cp.base.idb_vocab.names))

# %%
# A chain rising from S to T maps into the order; an edge from T up to S does not
rising = Structure.from_facts(vocab, [("T", ("x",)), ("R", ("y", "x")), ("R", ("z", "y")), ("S", ("z",))])
falling = Structure.from_facts(vocab, [("S", ("x",)), ("R", ("y", "x")), ("T", ("y",))])
for name, a in [("rising", rising), ("falling", falling)]:
    r = canonical_accept(leq, 1, 2, "symmetric", a)
    print(name, "certificate:", r.accepted, "maps to template:", maps_to(a, leq))
