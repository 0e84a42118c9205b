"""Small Datalog programs used throughout the tests, demos and CLI."""
from __future__ import annotations

from .datalog import DatalogProgram, parse_program

# Reachability in the orientation-forgetting sense: the third rule walks
# edges backwards, which makes the program symmetric.
SYMMETRIC_REACHABILITY = """\
edb E/2, S/1, T/1.
idb I/1, G/0.
goal G.
I(x) :- S(x).
I(y) :- I(x), E(x,y).
I(x) :- I(y), E(x,y).
G :- I(x), T(x).
"""

# Directed S-to-T reachability: the same program without the backward rule.
ST_CONN = """\
edb E/2, S/1, T/1.
idb I/1, G/0.
goal G.
I(x) :- S(x).
I(y) :- I(x), E(x,y).
G :- I(x), T(x).
"""

# Cliques of even size. The first three rules check that n is even, the
# rest walk over every pair x < y once, reading both E(x,y) and E(y,x).
EVEN_CLIQUES = """\
edb E/2.
idb I/1, G1/0, J/2, G2/0.
goal G2.
I(y) :- first(x), suc(x,y).
I(z) :- I(x), suc(x,y), suc(y,z).
G1 :- I(x), last(x).
J(x,y) :- G1, first(x), first(y).
J(x,z) :- J(x,y), suc(y,z), E(x,z), E(z,x).
J(z,w) :- J(x,y), last(y), suc(x,z), suc(z,w), E(z,w), E(w,z).
G2 :- J(x,y), suc(x,y), last(y).
"""

# Accepts exactly the structures with at least one E-edge.
ONE_EDGE = """\
edb E/2.
idb G/0.
goal G.
G :- E(x,y).
"""

# Accepts when S and T are both nonempty. A single element carrying both
# labels is accepted but is not split-minimal, which the surgery demo exposes.
S_AND_T = """\
edb S/1, T/1.
idb H/0, G/0.
goal G.
H :- S(x).
G :- H, T(y).
"""

_TEXTS = {
    "symmetric-reachability": SYMMETRIC_REACHABILITY,
    "st-conn": ST_CONN,
    "even-cliques": EVEN_CLIQUES,
    "one-edge": ONE_EDGE,
    "s-and-t": S_AND_T,
}


def program(name: str) -> DatalogProgram:
    """Parse one of the bundled programs by name."""
    try:
        return parse_program(_TEXTS[name])
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(_TEXTS)}") from None


def names() -> list[str]:
    return sorted(_TEXTS)
