import random

import pytest
from hypothesis import given, strategies as st

from cspbelow.datalog import (Derivation, Step, accepts, classify_fragment, derivation_properties,
                              evaluate, extract_structure, find_read_once_derivation,
                              format_program, parse_program, validate_derivation)
from cspbelow.errors import InputError, ParseError
from cspbelow.fixtures import program
from cspbelow.structures import Structure, Vocabulary, maps_to
from cspbelow.succro import SuccessorStructure

from oracles import naive_fixpoint, random_structure, reachable

EST = Vocabulary.of(E=2, S=1, T=1)
SYM = program("symmetric-reachability")
ST = program("st-conn")


def labelled(edges, s, t, extra=()):
    dom = {x for e in edges for x in e} | set(s) | set(t) | set(extra)
    return Structure(EST, dom, {"E": edges, "S": [(x,) for x in s], "T": [(x,) for x in t]})


BACK_AND_FORTH = labelled([("a", "b"), ("c", "b"), ("c", "d")], "a", "d")
BACK_AND_FORTH_DERIVATION = Derivation((
    Step(0, {"x": "a"}),
    Step(1, {"x": "a", "y": "b"}),
    Step(2, {"y": "b", "x": "c"}),
    Step(1, {"x": "c", "y": "d"}),
    Step(3, {"x": "d"}),
))


def test_symmetric_reachability_program_shape():
    assert len(SYM.rules) == 4 and SYM.goal == "G"
    report = classify_fragment(SYM)
    assert report.fragment == "symmetric" and report.width == (1, 2)


def test_dropping_the_backward_rule_leaves_a_linear_program():
    report = classify_fragment(ST)
    assert report.fragment == "linear" and report.missing_symmetric_pairs == (1,)


def test_self_paired_recursive_rule_is_symmetric():
    p = parse_program("edb E/2. idb I/1, G/0. goal G.\n"
                      "I(x) :- E(x,x).\nI(x) :- I(y), E(x,y), E(y,x).\nG :- I(x).\n")
    assert classify_fragment(p).fragment == "symmetric"


def test_nonlinear_program_is_general():
    p = parse_program("edb E/2. idb I/1, G/0. goal G.\nI(x) :- E(x,x).\nG :- I(x), I(y).\n")
    assert classify_fragment(p).fragment == "general"
    assert accepts(p, Structure(Vocabulary.of(E=2), "a", {"E": [("a", "a")]}))
    assert evaluate(p, Structure(Vocabulary.of(E=2), "a", {"E": [("a", "a")]})).witness is None


def test_program_without_rules_is_a_parse_error():
    with pytest.raises(ParseError):
        parse_program("edb E/2. idb G/0. goal G.\n")


@pytest.mark.parametrize("text", [
    "idb G/0. G :- E(x).",                                  # no goal
    "edb E/2. idb G/0. goal H. G :- E(x,y).",               # undeclared goal
    "edb E/2. idb G/0. goal G. G :- E(x).",                 # arity mismatch
    "edb E/2. idb I/1, G/0. goal G. I(x) :- G, E(x,x). G :- I(x).",  # goal in a body
])
def test_malformed_programs(text):
    with pytest.raises(ParseError):
        parse_program(text)


def test_format_round_trip():
    for name in ("symmetric-reachability", "st-conn", "even-cliques"):
        p = program(name)
        assert parse_program(format_program(p)) == p


def test_zigzag_reachability_accepted():
    result = evaluate(SYM, BACK_AND_FORTH)
    assert result.accepted
    ok, problems = validate_derivation(SYM, result.witness, BACK_AND_FORTH)
    assert ok, problems


def test_isolated_target_rejected():
    assert not accepts(SYM, labelled([("a", "b")], "a", "c"))


def test_back_and_forth_derivation():
    ok, problems = validate_derivation(SYM, BACK_AND_FORTH_DERIVATION, BACK_AND_FORTH)
    assert ok, problems
    assert derivation_properties(SYM, BACK_AND_FORTH_DERIVATION).read_once
    ex = extract_structure(SYM, BACK_AND_FORTH_DERIVATION)
    assert ex.relation("E") == {("a", "b"), ("c", "b"), ("c", "d")}
    assert ex.relation("S") == {("a",)} and ex.relation("T") == {("d",)}


def test_perturbed_witness_names_the_chaining_position():
    steps = list(BACK_AND_FORTH_DERIVATION.steps)
    steps[2] = Step(2, {"y": "d", "x": "c"})
    ok, problems = validate_derivation(SYM, Derivation(tuple(steps)))
    assert not ok and any("1->2" in msg for msg in problems)


def test_derivation_json_round_trip():
    d = BACK_AND_FORTH_DERIVATION
    assert Derivation.loads(d.dumps()) == d


def test_repeated_instantiation_is_not_read_once():
    d = Derivation((Step(0, {"x": "a"}), Step(1, {"x": "a", "y": "b"}), Step(2, {"y": "b", "x": "a"}),
                    Step(1, {"x": "a", "y": "b"}), Step(3, {"x": "b"})))
    a = labelled([("a", "b")], "a", "b")
    assert validate_derivation(SYM, d, a)[0]
    assert not derivation_properties(SYM, d).read_once


def test_free_derivation():
    d = Derivation((Step(0, {"x": "a"}), Step(1, {"x": "a", "y": "b"}), Step(2, {"x": "b"})))
    props = derivation_properties(ST, d)
    assert props.free and props.read_once
    # the same value reused in two unrelated classes breaks freeness
    loop = Derivation((Step(0, {"x": "a"}), Step(1, {"x": "a", "y": "a"}), Step(2, {"x": "a"})))
    assert not derivation_properties(ST, loop).free


def test_pure_idb_chaining_extracts_an_empty_structure():
    p = parse_program("edb E/2. idb I/0, G/0. goal G.\nI :- first(x).\nG :- I.\n")
    d = evaluate(p, SuccessorStructure.from_facts(p.edb_vocab, [], 2)).witness
    assert extract_structure(p, d).relation("E") == frozenset()


@given(st.integers(0, 2**32))
def test_st_conn_matches_bfs(seed):
    rng = random.Random(seed)
    a = random_structure(rng, EST, rng.randint(1, 5), 0.3)
    expected = reachable(a.relation("E"), [t[0] for t in a.relation("S")], [t[0] for t in a.relation("T")])
    result = evaluate(ST, a)
    assert result.accepted == expected
    if expected:
        assert validate_derivation(ST, result.witness, a)[0]
        assert maps_to(extract_structure(ST, result.witness).expand(EST), a)


@given(st.integers(0, 2**32), st.sampled_from(["symmetric-reachability", "st-conn", "even-cliques"]))
def test_seminaive_matches_naive_fixpoint(seed, name):
    rng = random.Random(seed)
    p = program(name)
    if p.builtins_used:
        n = rng.randint(1, 4)
        facts = [("E", (str(x), str(y))) for x in range(1, n + 1) for y in range(1, n + 1) if rng.random() < 0.8]
        a = SuccessorStructure.from_facts(p.edb_vocab, facts, n).full()
    else:
        a = random_structure(rng, p.edb_vocab, rng.randint(1, 4), 0.3)
    assert accepts(p, a) == naive_fixpoint(p, a)


@given(st.integers(0, 2**32))
def test_acceptance_is_preserved_by_quotients(seed):
    rng = random.Random(seed)
    a = random_structure(rng, EST, rng.randint(2, 5), 0.25)
    quotient = {x: rng.choice(a.domain[: rng.randint(1, a.size)]) for x in a.domain}
    image = a.rename(quotient)
    for p in (SYM, ST):
        if accepts(p, a):
            assert accepts(p, image)


def test_read_once_search():
    d = find_read_once_derivation(SYM, BACK_AND_FORTH)
    assert d is not None and validate_derivation(SYM, d, BACK_AND_FORTH)[0]
    assert derivation_properties(SYM, d).read_once
    assert find_read_once_derivation(SYM, labelled([("a", "b")], "a", "c")) is None
    with pytest.raises(InputError):
        find_read_once_derivation(parse_program(
            "edb E/2. idb I/1, G/0. goal G.\nI(x) :- E(x,x).\nG :- I(x), I(y).\n"), BACK_AND_FORTH.restrict(Vocabulary.of(E=2)))


def test_missing_input_relation_is_rejected():
    with pytest.raises(InputError):
        evaluate(SYM, Structure(Vocabulary.of(E=2), "a"))
