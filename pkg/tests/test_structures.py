import random

import pytest
from hypothesis import given, strategies as st

from cspbelow.errors import InputError, ParseError, ResourceError
from cspbelow.pathscape import OrientedPath
from cspbelow.structures import (Homomorphism, Operation, Structure, Vocabulary, are_isomorphic,
                                 automorphisms, core_of, digraph, find_homomorphism,
                                 format_structure, homomorphisms, is_core, is_maltsev,
                                 is_polymorphism, maps_to, parse_structure, preserves_relation,
                                 projection, union_structures)

from oracles import brute_homomorphisms, brute_maps_to, random_structure

E = Vocabulary.of(E=2)
EST = Vocabulary.of(E=2, S=1, T=1)
LEQ = Structure(Vocabulary.of(E=2, S=1, T=1), ["0", "1"],
                {"E": [("0", "0"), ("0", "1"), ("1", "1")], "S": [("0",)], "T": [("1",)]})
R_LEQ = digraph([("0", "0"), ("0", "1"), ("1", "1")])


def test_vocabulary_rejects_duplicates_and_bad_names():
    with pytest.raises(InputError):
        Vocabulary((("E", 2), ("E", 1)))
    with pytest.raises(InputError):
        Vocabulary((("1bad", 1),))
    assert Vocabulary.of(E=2).union(Vocabulary.of(S=1)).names == ("E", "S")
    with pytest.raises(InputError):
        Vocabulary.of(E=2).union(Vocabulary.of(E=1))


def test_structure_validation():
    with pytest.raises(InputError):
        Structure(E, ["a"], {"E": [("a", "b")]})
    with pytest.raises(InputError):
        Structure(E, ["a"], {"E": [("a",)]})
    with pytest.raises(InputError):
        Structure(E, ["a"], {"F": []})


def test_parse_format_round_trip():
    text = "domain: a b c\nE/2: (a,b) (c,b)\nS/1: (a)\nT/1:\n"
    s = parse_structure(text)
    assert s.relation("E") == {("a", "b"), ("c", "b")}
    assert parse_structure(format_structure(s)) == s
    with pytest.raises(ParseError):
        parse_structure("E/2: (a,b)\n")
    with pytest.raises(ParseError):
        parse_structure("domain: a\nE/2: (a)\n")


@given(st.integers(0, 2**32))
def test_random_structures_round_trip(seed):
    s = random_structure(random.Random(seed), EST, 3, 0.3)
    assert parse_structure(format_structure(s)) == s


def test_identity_is_a_homomorphism():
    h = find_homomorphism(LEQ, LEQ)
    assert h is not None and h.is_valid()
    assert Homomorphism(LEQ, LEQ, {x: x for x in LEQ.domain}).is_valid()


def test_three_cycle_does_not_map_to_an_edge():
    c3 = digraph([("0", "1"), ("1", "2"), ("2", "0")])
    k2 = digraph([("0", "1"), ("1", "0")])
    assert find_homomorphism(c3, k2) is None
    assert not brute_maps_to(c3, k2)


def test_zigzag_digraph_to_leq_template_matches_enumeration():
    a = Structure(EST, "abcd", {"E": [("a", "b"), ("c", "b"), ("c", "d")], "S": [("a",)], "T": [("d",)]})
    fast = sorted(tuple(sorted(h.items())) for h in homomorphisms(a, LEQ))
    slow = sorted(tuple(sorted(h.items())) for h in brute_homomorphisms(a, LEQ))
    assert fast == slow
    assert fast  # a -> 0, 0, 1, 1 works


@given(st.integers(0, 2**32))
def test_homomorphism_search_matches_brute_force(seed):
    rng = random.Random(seed)
    a = random_structure(rng, E, rng.randint(1, 4), 0.35)
    b = random_structure(rng, E, rng.randint(1, 3), 0.5, prefix="b")
    fast = {tuple(sorted(h.items())) for h in homomorphisms(a, b)}
    slow = {tuple(sorted(h.items())) for h in brute_homomorphisms(a, b)}
    assert fast == slow
    for h in fast:
        assert Homomorphism(a, b, dict(h)).is_valid()


def test_node_budget_raises():
    a = digraph([], vertices=[f"x{i}" for i in range(8)])
    with pytest.raises(ResourceError):
        list(homomorphisms(a, digraph([], vertices="abc"), max_nodes=50))


def test_union():
    a = digraph([("x", "y")])
    b = digraph([("y", "z")])
    assert union_structures(a, a) == a
    u = union_structures(a, b)
    assert u.domain == ("x", "y", "z") and u.relation("E") == {("x", "y"), ("y", "z")}
    assert union_structures(a, digraph([("p", "q")])).size == 4


def test_composition():
    a = digraph([("a", "b"), ("b", "c")])
    mid = digraph([("0", "1"), ("1", "0")])
    f = find_homomorphism(a, mid)
    g = Homomorphism(mid, mid, {"0": "1", "1": "0"})
    assert f.then(g).is_valid()


def test_cores():
    loop = digraph([("a", "a")])
    core, _ = core_of(loop)
    assert core == loop
    two_edges = digraph([("a", "b"), ("c", "d")])
    core, r = core_of(two_edges)
    assert core.size == 2 and core.tuple_count() == 1 and r.is_valid()
    assert is_core(core) and not is_core(two_edges)


def test_core_of_path_glued_to_its_reverse():
    # FFBFF followed by its reverse BBFBB collapses back onto FFBFF
    p = OrientedPath("FFBFF" + "FFBFF"[::-1].translate(str.maketrans("FB", "BF")))
    glued = p.structure()
    core, r = core_of(glued)
    assert r.is_valid() and are_isomorphic(core, OrientedPath("FFBFF").structure())


def test_automorphisms_of_a_directed_cycle():
    c3 = digraph([("0", "1"), ("1", "2"), ("2", "0")])
    assert len(list(automorphisms(c3))) == 3


def test_polymorphism_examples():
    boolean = ["0", "1"]
    xor = Operation.from_function(boolean, 3, lambda x, y, z: str(int(x) ^ int(y) ^ int(z)))
    minimum = Operation.from_function(boolean, 2, min)
    majority = Operation.from_function(boolean, 3, lambda x, y, z: sorted([x, y, z])[1])
    assert not preserves_relation(xor, R_LEQ, "E")
    assert preserves_relation(minimum, R_LEQ, "E")
    assert is_maltsev(xor) and not is_maltsev(majority)
    mod3 = Operation.from_function("012", 3, lambda x, y, z: str((int(x) - int(y) + int(z)) % 3))
    assert is_maltsev(mod3)
    for i in range(3):
        assert is_polymorphism(projection(boolean, 3, i), R_LEQ)


def test_operation_must_be_total():
    with pytest.raises(InputError):
        Operation(("0", "1"), 1, {("0",): "0"})
    with pytest.raises(InputError):
        is_maltsev(Operation.from_function("01", 2, min))


@given(st.integers(0, 2**32))
def test_brute_force_preservation_agrees(seed):
    rng = random.Random(seed)
    b = random_structure(rng, E, 2, 0.5, prefix="")
    b = b.rename({x: x for x in b.domain})
    table = {(x, y): rng.choice(b.domain) for x in b.domain for y in b.domain}
    op = Operation(b.domain, 2, table)
    rel = b.relation("E")
    expected = all((op(s[0], t[0]), op(s[1], t[1])) in rel for s in rel for t in rel)
    assert preserves_relation(op, b, "E") == expected
    assert maps_to(b, b)
