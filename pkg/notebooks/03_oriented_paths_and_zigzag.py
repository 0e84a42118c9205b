# %% [markdown]
# Oriented paths, zigzags and path templates
# ==========================================
#
# Oriented paths are written as words over F (forward arc) and B
# (backward arc). The zigzag operator lays copies of the bags of a path
# representation along a minimal oriented path, which is how obstruction
# families for path templates are grown.

# %%
from cspbelow.pathscape import (OrientedPath, edge_representation, find_n_digraph, path_word_of,
                                projection_hom, validate_representation, zigzag)
from cspbelow.pathclassify import (NlWitness, build_leq_gadget, classify_path_shape, nl_witness_search,
                                   wave_obstructions)

p = OrientedPath("FFBFF")
print(p.word, "height", p.height, "minimal", p.minimal, "levels", p.levels)

# %%
# Represent the directed path FFF by its edges, then zigzag it along FFBFF
whole, rep = edge_representation("FFF")
z = zigzag(rep, "FFBFF")
print("glued word:", path_word_of(z.union()))
print("valid (1,2) representation:", validate_representation(z.representation(), z.union())[0])
print("projects back:", projection_hom(z, rep).is_valid())

# %%
# An N-digraph is a subword F^s B^s F^s; FFBFF has one with s = 1 starting at arc 1
start, s = find_n_digraph("FFBFF")
print("N-digraph at", start, "with s =", s)

# %% [markdown]
# Path templates split into shapes. Waves and staircases have finite
# obstruction sets of oriented paths; other cores can carry a
# witness that makes the problem hard for nondeterministic logspace.

# %%
for word in ["FFF", "FFBFF", "FFFBBFFF", "FFBFFFBFF", "FFFFBBFBBFFFF"]:
    print(f"{word:15s} {classify_path_shape(word).kind}")

# %%
wave = "FFFBBFFF"
obs = wave_obstructions(wave, 10)
print(len(obs.emitted), "obstructions; taller than", obs.taller_than, "never maps")
for o in obs.emitted[:3]:
    print("  ", o.path.word)
for word in ["FFFF", "FFBBFF", "FFFFF"]:
    print(word, "certified not to map:", obs.covers(word))

# %%
core = "FFFFBBFBBFFFF"
witness = nl_witness_search(core)
print("split points", witness.split, "q =", witness.q.word)
gadget = build_leq_gadget(core, NlWitness((1, 4, 9, 12), OrientedPath("FFF"), 3, {}))
print("gadget on", gadget.structure.size, "vertices defines", sorted(gadget.projection))
