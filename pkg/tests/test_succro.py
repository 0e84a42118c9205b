import itertools
import random

import pytest
from hypothesis import given, strategies as st

from cspbelow.datalog import accepts, derivation_properties, evaluate, parse_program, validate_derivation
from cspbelow.errors import InputError
from cspbelow.fixtures import program
from cspbelow.pathscape import validate_representation
from cspbelow.structures import (Structure, Vocabulary, are_isomorphic, digraph, find_homomorphism,
                                 maps_to)
from cspbelow.succro import (Arc, MnBP, SuccessorStructure, attach_successor,
                             build_cut_decomposition, compile_to_mnbp, embedders, evaluate_mnbp,
                             local_minimality_report, minimize_in_class, occurrences,
                             pruned_distribution, single_splits, split, split_variant_map,
                             surgery_experiment)

from oracles import brute_maps_to, random_structure, reachable

EST = Vocabulary.of(E=2, S=1, T=1)
ST = program("st-conn")
PEC = program("even-cliques")
EDGE = digraph([("0", "1")])


def succ(vocab, n, **relations):
    return SuccessorStructure(Structure(vocab, range(1, n + 1), relations))


def clique(n):
    return SuccessorStructure.from_facts(Vocabulary.of(E=2), [
        ("E", (str(x), str(y))) for x in range(1, n + 1) for y in range(1, n + 1)], n)


# successor structures

def test_identity_ordering_keeps_the_base():
    base = digraph([("1", "2"), ("2", "3")])
    a = attach_successor(base, ["1", "2", "3"])
    assert a.base == base and a.n == 3
    assert a.full().relation("suc") == {("1", "2"), ("2", "3")}
    assert a.full().relation("first") == {("1",)} and a.full().relation("last") == {("3",)}


def test_orderings_give_isomorphic_bases():
    base = digraph([("x", "y"), ("y", "z")])
    a = attach_successor(base, ["x", "y", "z"])
    b = attach_successor(base, {"z": 1, "x": 2, "y": 3})
    assert are_isomorphic(a.base, b.base) and a.base != b.base


def test_bad_orderings():
    base = digraph([("x", "y")])
    with pytest.raises(InputError):
        attach_successor(base, ["x"])
    with pytest.raises(InputError):
        attach_successor(base, {"x": 1, "y": 1})
    with pytest.raises(InputError):
        SuccessorStructure(digraph([("a", "b")]))


def test_k4_with_any_ordering_is_an_even_clique():
    k4 = digraph([(x, y) for x in "abcd" for y in "abcd"])
    for perm in itertools.permutations("abcd"):
        assert accepts(PEC, attach_successor(k4, perm))


def test_even_clique_parity():
    for n in range(1, 9):
        assert accepts(PEC, clique(n)) == (n % 2 == 0)


# splits

def test_split_loop():
    a = digraph([("a", "a")])
    occ = occurrences(a, "a")
    assert occ == [("E", ("a", "a"), 0), ("E", ("a", "a"), 1)]
    out = split(a, "a", [occ[0]])
    assert out.relation("E") == {("a'", "a")}
    assert out.size == 2


def test_split_preconditions():
    a = digraph([("a", "b")])
    with pytest.raises(InputError):
        split(a, "a", [("E", ("a", "b"), 0)])  # only one occurrence
    b = digraph([("a", "a")])
    with pytest.raises(InputError):
        split(b, "a", [])
    with pytest.raises(InputError):
        split(b, "a", occurrences(b, "a"))
    with pytest.raises(InputError):
        split(b, "a", [("E", ("a", "a"), 5)])


@given(st.integers(0, 2**32))
def test_random_splits_map_back(seed):
    rng = random.Random(seed)
    a = random_structure(rng, EST, rng.randint(1, 4), 0.4)
    options = [(x, occurrences(a, x)) for x in a.domain if len(occurrences(a, x)) >= 2]
    if not options:
        return
    x, occ = rng.choice(options)
    chosen = rng.sample(occ, rng.randint(1, len(occ) - 1))
    out = split(a, x, chosen)
    assert out.tuple_count() == a.tuple_count()
    assert out.size == a.size + 1
    h = find_homomorphism(out, a)
    assert h is not None and h.is_valid()
    assert split_variant_map(out, a) is not None


def no_edge_map(s):
    return not brute_maps_to(s, EDGE)


def test_minimize_two_cycles():
    two = digraph([("a", "b"), ("b", "a"), ("c", "d"), ("d", "c")])
    out = minimize_in_class(two, no_edge_map)
    assert no_edge_map(out)
    assert local_minimality_report(out, no_edge_map) == []
    assert maps_to(out, two)
    # a 2-path a -> b -> c is the smallest digraph that does not map to a single edge
    assert are_isomorphic(out, digraph([("x", "y"), ("y", "z")]))


def test_minimal_input_is_a_fixpoint():
    path = digraph([("x", "y"), ("y", "z")])
    assert minimize_in_class(path, no_edge_map) == path
    with pytest.raises(InputError):
        minimize_in_class(EDGE, no_edge_map)


@given(st.integers(0, 2**32))
def test_minimization_is_locally_minimal(seed):
    rng = random.Random(seed)
    a = random_structure(rng, Vocabulary.of(E=2), rng.randint(2, 4), 0.5)
    target = digraph([("0", "1"), ("1", "0")])
    member = lambda s: not brute_maps_to(s, target)
    if not member(a):
        return
    out = minimize_in_class(a, member)
    assert member(out) and maps_to(out, a)
    assert local_minimality_report(out, member) == []
    assert not any(member(c) for _, c in single_splits(out))


# branching programs

def test_single_unlabelled_arc_accepts_everything():
    h = MnBP(2, Vocabulary.of(E=2), ("s", "t"), (Arc("s", "t"),))
    for e in ([], [("1", "2")]):
        assert evaluate_mnbp(h, succ(h.vocab, 2, E=e)).accepted


def test_compiled_st_conn_at_three():
    h = compile_to_mnbp(ST, 3)
    yes = succ(EST, 3, E=[("1", "2"), ("2", "3")], S=[("1",)], T=[("3",)])
    result = evaluate_mnbp(h, yes)
    assert result.accepted and result.read_once
    assert reachable(yes.base.relation("E"), ["1"], ["3"])
    no = succ(EST, 3, S=[("1",)], T=[("3",)])
    assert not evaluate_mnbp(h, no).accepted


def test_compiled_st_conn_exhaustive_at_three():
    h = compile_to_mnbp(ST, 3)
    pairs = [(str(x), str(y)) for x in range(1, 4) for y in range(1, 4)]
    base = Structure(EST, range(1, 4))
    for mask in range(1 << 15):
        e = [q for i, q in enumerate(pairs) if mask >> i & 1]
        s = [x for x in range(1, 4) if mask >> (8 + x) & 1]
        t = [x for x in range(1, 4) if mask >> (11 + x) & 1]
        a = base.with_relations({"E": e, "S": [(str(x),) for x in s], "T": [(str(x),) for x in t]})
        expected = reachable(e, [str(x) for x in s], [str(x) for x in t])
        assert evaluate_mnbp(h, a).accepted == expected


def test_compiled_even_cliques_over_symmetric_edge_sets():
    n = 4
    h = compile_to_mnbp(PEC, n)
    pairs = [(x, y) for x in range(1, n + 1) for y in range(x, n + 1)]
    for mask in range(1 << len(pairs)):
        chosen = [q for i, q in enumerate(pairs) if mask >> i & 1]
        edges = {(str(x), str(y)) for x, y in chosen} | {(str(y), str(x)) for x, y in chosen}
        a = succ(Vocabulary.of(E=2), n, E=edges)
        expected = all((str(x), str(y)) in edges for x in range(1, n + 1) for y in range(1, n + 1) if x != y)
        assert evaluate_mnbp(h, a).accepted == accepts(PEC, a) == expected


@pytest.mark.parametrize("name,n", [("st-conn", 3), ("st-conn", 5), ("even-cliques", 4),
                                    ("symmetric-reachability", 4), ("one-edge", 3)])
def test_node_count_within_bound(name, n):
    h = compile_to_mnbp(program(name), n)
    d = h.diagnostics
    assert d["state_nodes"] <= d["state_bound"]
    assert h.size == d["state_nodes"] + d["aux_nodes"]


def test_mnbp_json_round_trip():
    h = compile_to_mnbp(ST, 3)
    back = MnBP.loads(h.dumps())
    assert back == h
    with pytest.raises(InputError):
        MnBP.loads('{"n": 1}')
    with pytest.raises(InputError):
        MnBP(2, Vocabulary.of(E=2), ("s", "t"), (Arc("s", "t", ("E", ("1", "3"))),))


def test_mnbp_input_checks():
    h = compile_to_mnbp(ST, 3)
    with pytest.raises(InputError):
        evaluate_mnbp(h, succ(EST, 2))
    with pytest.raises(InputError):
        evaluate_mnbp(h, succ(Vocabulary.of(E=2), 3))
    with pytest.raises(InputError):
        compile_to_mnbp(parse_program("edb E/2. idb I/1, G/0. goal G.\nI(x) :- E(x,x).\nG :- I(x), I(y).\n"), 2)


@given(st.integers(0, 2**32))
def test_compiled_matches_interpreted_at_four(seed):
    rng = random.Random(seed)
    h = compile_to_mnbp(ST, 4)
    a = SuccessorStructure(random_structure(rng, EST, 4, 0.3).rename({f"a{i}": str(i + 1) for i in range(4)}))
    got = evaluate_mnbp(h, a)
    assert got.accepted == accepts(ST, a)
    if got.accepted:
        assert got.read_once  # shortest paths never revisit a state


# cut decompositions

def test_disjoint_bags():
    bags = [digraph([("a", "b")]), digraph([("c", "d")]), digraph([("e", "f")])]
    cut = build_cut_decomposition(bags, 0, 2)
    assert cut.violation is None and cut.representation.params == (0, 2)
    assert validate_representation(cut.representation)[0]


def test_chain_bags():
    bags = [digraph([("a", "b")]), digraph([("b", "c")]), digraph([("c", "d")])]
    cut = build_cut_decomposition(bags, 1, 2)
    rep = cut.representation
    assert rep.params == (1, 3) and validate_representation(rep)[0]
    assert [b.domain for b in rep.bags] == [("a", "b"), ("b", "c"), ("c", "d")]


def test_violation_reports_the_cut():
    bags = [digraph([], "ab"), digraph([], "c"), digraph([], "ab")]
    cut = build_cut_decomposition(bags, 1, 2)
    assert cut.representation is None and cut.violation == 1


def test_oversized_bag():
    with pytest.raises(InputError):
        build_cut_decomposition([digraph([], "abc")], 1, 2)


@given(st.integers(0, 2**32))
def test_cut_decompositions_validate(seed):
    rng = random.Random(seed)
    j, k = rng.randint(0, 2), rng.randint(1, 3)
    pool = [f"x{i}" for i in range(8)]
    bags = [digraph([], rng.sample(pool, rng.randint(1, k))) for _ in range(rng.randint(1, 6))]
    cut = build_cut_decomposition(bags, j, k)
    if cut.representation is not None:
        assert cut.representation.params == (j, k + j)
        assert validate_representation(cut.representation)[0]
    else:
        g = cut.violation
        left = set().union(*(b.domain for b in bags[:g]))
        right = set().union(*(b.domain for b in bags[g:]))
        assert len(left & right) > j


# surgery

def test_embedders_respect_blocks():
    m = digraph([("a", "b")])
    maps = list(embedders(m, 4))
    assert len(maps) == 4
    assert all(phi["a"] in ("1", "2") and phi["b"] in ("3", "4") for phi in maps)
    with pytest.raises(InputError):
        list(embedders(m, 3))


def test_one_edge_surgery():
    m = digraph([("a", "b")])
    trace = surgery_experiment(program("one-edge"), m, 4)
    assert trace is not None and trace.valid and trace.accepted
    assert are_isomorphic(trace.extracted.induced(trace.extracted.active_domain()), m)
    assert trace.split_variant
    # every embedder yields the same prototype, so there is one class
    assert len(trace.classes) == 1 and len(trace.classes[0]) == len(trace.embedders)
    assert trace.cut["left"] != trace.cut["right"]


def test_s_and_t_surgery_produces_a_genuine_split():
    vocab = Vocabulary.of(S=1, T=1)
    m = Structure(vocab, ["a"], {"S": [("a",)], "T": [("a",)]})
    p = program("s-and-t")
    trace = surgery_experiment(p, m, 3)
    assert trace.valid and trace.accepted and trace.split_variant
    assert trace.prototype_cut.violation == 1
    active = trace.extracted.induced(trace.extracted.active_domain())
    assert active.size == 2 and active.tuple_count() == 2
    assert validate_derivation(p, trace.spliced)[0]


def test_st_conn_surgery():
    m = Structure(EST, "ab", {"E": [("a", "b")], "S": [("a",)], "T": [("b",)]})
    trace = surgery_experiment(ST, m, 4)
    assert trace is not None and trace.valid and trace.accepted


def test_each_embedder_overlaps_itself_fully():
    m = digraph([("a", "b")])
    trace = surgery_experiment(program("one-edge"), m, 4)
    j = trace.program_width[0]
    for bags in trace.distributions:
        used = {x for bag in bags for _, t in bag for x in t}
        assert len(used) == m.size > j
    assert trace.cut["overlap"] <= j


def test_surgery_budget_and_inputs():
    m = digraph([("a", "b")])
    assert surgery_experiment(program("one-edge"), m, 4, max_embedders=2) is None
    with pytest.raises(InputError):
        surgery_experiment(program("one-edge"), m, 3)
    with pytest.raises(InputError):
        surgery_experiment(ST, m, 4)


def test_pruned_distribution_skips_builtin_only_steps():
    d = evaluate(PEC, clique(2)).witness
    bags, steps = pruned_distribution(PEC, d)
    atoms = [a for bag in bags for a in bag]
    assert all(name == "E" for name, _ in atoms)
    assert len(steps) == len(bags) and steps == sorted(steps)
    assert derivation_properties(PEC, d).read_once
