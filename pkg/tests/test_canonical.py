import itertools
import random

import pytest
from hypothesis import given, strategies as st

from cspbelow.canonical import build_canonical, canonical_accept, materialized_accept
from cspbelow.datalog import classify_fragment, evaluate, validate_derivation
from cspbelow.errors import InputError
from cspbelow.structures import Structure, Vocabulary, digraph

from oracles import brute_maps_to, canonical_rule_count, random_structure

RST = Vocabulary.of(R=2, S=1, T=1)
LEQ = Structure(RST, ["0", "1"], {"R": [("0", "0"), ("0", "1"), ("1", "1")],
                                  "S": [("0",)], "T": [("1",)]})
K2 = digraph([("0", "1"), ("1", "0")])


@pytest.fixture(scope="module")
def leq_programs():
    return {mode: build_canonical(LEQ, 1, 2, mode) for mode in ("linear", "symmetric")}


def idb_relation(b, name):
    arity, mask = (int(x) for x in name[1:].split("_"))
    tuples = list(itertools.product(b.domain, repeat=arity))
    return {t for i, t in enumerate(tuples) if mask >> i & 1}


def rule_is_valid(b, rule, idb_names):
    vs = sorted(rule.variables)
    for values in itertools.product(b.domain, repeat=len(vs)):
        h = dict(zip(vs, values))

        def holds(atom):
            t = tuple(h[v] for v in atom.args)
            rel = idb_relation(b, atom.predicate) if atom.predicate in idb_names else b.relation(atom.predicate)
            return t in rel
        if all(holds(x) for x in rule.body) and not holds(rule.head):
            return False
    return True


def test_leq_template_has_six_idbs(leq_programs):
    for cp in leq_programs.values():
        assert len(cp.base.idb_vocab) == 6
        assert set(cp.sidecar()) == {"I0_0", "I0_1", "I1_0", "I1_1", "I1_2", "I1_3"}


def test_rule_counts_match_independent_enumeration(leq_programs):
    assert len(leq_programs["linear"].base.rules) == canonical_rule_count(LEQ, 1, 2, False) == 10578
    assert len(leq_programs["symmetric"].base.rules) == canonical_rule_count(LEQ, 1, 2, True) == 9146


@pytest.mark.parametrize("b", [K2, digraph([("0", "0")]), digraph([("0", "1")])])
def test_rule_counts_on_digraph_templates(b):
    for mode, sym in (("linear", False), ("symmetric", True)):
        assert len(build_canonical(b, 1, 2, mode).base.rules) == canonical_rule_count(b, 1, 2, sym)


def test_symmetric_mode_is_symmetric_and_inside_linear(leq_programs):
    sym, lin = leq_programs["symmetric"].base, leq_programs["linear"].base
    assert classify_fragment(sym).fragment == "symmetric"
    assert classify_fragment(lin).fragment in ("linear", "symmetric")
    assert {str(r) for r in sym.rules} <= {str(r) for r in lin.rules}


def test_degenerate_one_element_template():
    b = Structure(Vocabulary.of(U=1), ["0"], {"U": [("0",)]})
    cp = build_canonical(b, 1, 1)
    for a in (Structure(b.vocab, "xy", {"U": [("x",)]}), Structure(b.vocab, "x")):
        assert brute_maps_to(a, b)
        assert not evaluate(cp.base, a, want_witness=False).accepted


def test_template_never_accepts_itself():
    for mode in ("linear", "symmetric"):
        assert not canonical_accept(LEQ, 1, 2, mode, LEQ).accepted


def test_bad_parameters():
    with pytest.raises(InputError):
        build_canonical(LEQ, 2, 1)
    with pytest.raises(InputError):
        build_canonical(LEQ, 1, 2, "general")


def test_backward_path_is_rejected_by_leq():
    a = Structure(RST, "abc", {"R": [("b", "a"), ("b", "c")], "S": [("a",)], "T": [("c",)]})
    # a -> 0 and a <= ... works since R(b,a): b=0 and a=0, R(b,c) fine: maps
    assert brute_maps_to(a, LEQ) and not canonical_accept(LEQ, 1, 2, "symmetric", a).accepted
    cyc = Structure(RST, "ab", {"R": [("a", "b")], "S": [("b",)], "T": [("a",)]})
    assert not brute_maps_to(cyc, LEQ)
    result = canonical_accept(LEQ, 1, 2, "linear", cyc)
    assert result.accepted


def test_lazy_matches_materialized_on_small_inputs(leq_programs):
    structures = []
    for n in (1, 2):
        dom = [f"a{i}" for i in range(n)]
        pairs = list(itertools.product(dom, repeat=2))
        for mask in range(1 << (n * n + 2 * n)):
            bits = [mask >> i & 1 for i in range(n * n + 2 * n)]
            structures.append(Structure(RST, dom, {
                "R": [q for q, bit in zip(pairs, bits) if bit],
                "S": [(x,) for x, bit in zip(dom, bits[n * n:]) if bit],
                "T": [(x,) for x, bit in zip(dom, bits[n * n + n:]) if bit]}))
    rng = random.Random(7)
    structures += [random_structure(rng, RST, 3, rng.choice([0.2, 0.35])) for _ in range(60)]
    for a in structures:
        for mode, cp in leq_programs.items():
            assert canonical_accept(LEQ, 1, 2, mode, a).accepted == materialized_accept(cp, a)


@given(st.integers(0, 2**32), st.sampled_from([(1, 2), (2, 3)]), st.sampled_from(["linear", "symmetric"]))
def test_soundness_and_witness(seed, jk, mode):
    rng = random.Random(seed)
    vocab = Vocabulary.of(E=2)
    b = random_structure(rng, vocab, rng.randint(1, 2), 0.5, prefix="b")
    a = random_structure(rng, vocab, rng.randint(1, 3), 0.4)
    result = canonical_accept(b, *jk, mode, a)
    if result.accepted:
        assert not brute_maps_to(a, b)
        ok, problems = validate_derivation(result.program, result.witness, a)
        assert ok, problems
        names = set(result.program.idb_vocab.names)
        assert all(rule_is_valid(b, r, names) for r in result.program.rules)
