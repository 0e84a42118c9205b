"""Canonical linear and symmetric (j,k)-programs of a template structure.

There is one IDB per relation Q of arity at most j over the template; its
name encodes the arity and a bitmask over the lexicographically ordered
tuples, e.g. ``I1_5``. The goal is ``I0_0``, the empty nullary relation.

A rule with at most k variables belongs to the program when its implication
holds under every instantiation of its variables over the template (equal
values for distinct variables included). Symmetric mode also demands the
reverse implication for recursive rules.

``canonical_accept`` decides acceptance without building the program: a
state is a pair (relation, tuple of the input), and every step uses the
strongest rule available for a window of at most k input elements.
"""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Sequence

from .datalog import Atom, DatalogProgram, Derivation, Step, evaluate
from .errors import InputError, ResourceError
from .structures import Structure, Vocabulary, check_vocab

LINEAR_MODE, SYMMETRIC_MODE = "linear", "symmetric"
GOAL_NAME = "I0_0"

DEFAULT_MAX_RULE_CHECKS = 3_000_000
DEFAULT_MAX_STATES = 200_000


class _Template:
    def __init__(self, b: Structure, j: int):
        self.b = b
        self.j = j
        self.tuples = {r: list(itertools.product(b.domain, repeat=r)) for r in range(j + 1)}
        self.index = {r: {t: i for i, t in enumerate(ts)} for r, ts in self.tuples.items()}

    def relation(self, r: int, mask: int) -> tuple[tuple[str, ...], ...]:
        return tuple(t for i, t in enumerate(self.tuples[r]) if mask >> i & 1)

    def full_mask(self, r: int) -> int:
        return (1 << len(self.tuples[r])) - 1


def idb_name(arity: int, mask: int) -> str:
    return f"I{arity}_{mask}"


def _check_params(b: Structure, j: int, k: int, mode: str) -> None:
    if mode not in (LINEAR_MODE, SYMMETRIC_MODE):
        raise InputError(f"mode must be linear or symmetric, not {mode!r}")
    if not 0 <= j <= k:
        raise InputError("canonical programs need 0 <= j <= k")
    if b.size == 0:
        raise InputError("template must be nonempty")


def _instantiations(b: Structure, variables: Sequence[str], atoms: Sequence[Atom]) -> list[dict]:
    """All maps variables -> B under which every atom holds in B."""
    out = []
    for values in itertools.product(b.domain, repeat=len(variables)):
        h = dict(zip(variables, values))
        if all(tuple(h[v] for v in a.args) in b.relation(a.predicate) for a in atoms):
            out.append(h)
    return out


def _image_mask(tpl: _Template, pairs, source_mask: int) -> int:
    out = 0
    for src, dst in pairs:
        if source_mask >> src & 1:
            out |= 1 << dst
    return out


def _upper_mask(tpl: _Template, pairs, r_head: int, body_mask: int) -> int:
    """Largest head relation whose reverse image stays inside body_mask."""
    bad = 0
    for src, dst in pairs:
        if not body_mask >> src & 1:
            bad |= 1 << dst
    return tpl.full_mask(r_head) & ~bad


def _submasks_between(low: int, high: int) -> Iterator[int]:
    free = high & ~low
    sub = free
    while True:
        yield low | sub
        if sub == 0:
            return
        sub = (sub - 1) & free


@dataclass(frozen=True)
class CanonicalProgram:
    base: DatalogProgram
    subscripts: dict
    params: tuple[int, int]
    mode: str

    def sidecar(self) -> dict:
        return {name: {"arity": len(rel[0]) if rel else arity, "tuples": [list(t) for t in rel]}
                for name, (arity, rel) in self.subscripts.items()}

    def sidecar_json(self) -> str:
        return json.dumps(self.sidecar(), indent=1, sort_keys=True)


def _canonical_variables(head: tuple, body: tuple | None, atoms: tuple) -> bool:
    """Keep one representative of each rule skeleton up to variable renaming."""
    variables = sorted({v for v in head} | set(body or ()) | {v for a in atoms for v in a.args})

    def encode(ren):
        return (tuple(ren[v] for v in head),
                None if body is None else tuple(ren[v] for v in body),
                tuple(sorted((a.predicate, tuple(ren[v] for v in a.args)) for a in atoms)))

    mine = encode({v: v for v in variables})
    for perm in itertools.permutations(variables):
        if encode(dict(zip(variables, perm))) < mine:
            return False
    return True


def _skeletons(vocab: Vocabulary, j: int, k: int, max_atoms: int | None
               ) -> Iterator[tuple[tuple, tuple | None, tuple]]:
    """Rule shapes: head args, body-IDB args (or None), EDB atoms; all variables used."""
    for m in range(k + 1):
        variables = [f"v{i}" for i in range(m)]
        all_atoms = [Atom(name, args) for name, arity in vocab.symbols
                     for args in itertools.product(variables, repeat=arity)]
        limit = len(all_atoms) if max_atoms is None else min(max_atoms, len(all_atoms))
        subsets = [c for size in range(limit + 1) for c in itertools.combinations(all_atoms, size)]
        for r in range(j + 1):
            for head in itertools.product(variables, repeat=r):
                bodies = [None] + [b for rb in range(j + 1) for b in itertools.product(variables, repeat=rb)]
                for body in bodies:
                    for atoms in subsets:
                        if body is None and not atoms:
                            continue
                        used = set(head) | set(body or ()) | {v for a in atoms for v in a.args}
                        if len(used) != m:
                            continue
                        if _canonical_variables(head, body, atoms):
                            yield head, body, atoms


def build_canonical(b: Structure, j: int, k: int, mode: str = LINEAR_MODE, *,
                    max_atoms: int | None = None,
                    max_rule_checks: int = DEFAULT_MAX_RULE_CHECKS) -> CanonicalProgram:
    """Materialize CL(b) (linear mode) or CS(b) (symmetric mode)."""
    _check_params(b, j, k, mode)
    tpl = _Template(b, j)
    relations = sorted(((r, mask) for r in range(j + 1) for mask in range(tpl.full_mask(r) + 1)))
    idb = Vocabulary(tuple((idb_name(r, mask), r) for r, mask in relations))
    subscripts = {idb_name(r, mask): (r, tpl.relation(r, mask)) for r, mask in relations}
    masks_by_arity = {r: range(tpl.full_mask(r) + 1) for r in range(j + 1)}
    budget = [0]

    def spend(n: int) -> None:
        budget[0] += n
        if budget[0] > max_rule_checks:
            raise ResourceError(f"canonical program enumeration exceeded {max_rule_checks} checks")

    rules: list[tuple[Atom, list[Atom]]] = []
    for head, body, atoms in _skeletons(b.vocab, j, k, max_atoms):
        variables = sorted(set(head) | set(body or ()) | {v for a in atoms for v in a.args})
        spend(len(b.domain) ** len(variables))
        hs = _instantiations(b, variables, atoms)
        r_head = len(head)
        head_image = [tpl.index[r_head][tuple(h[v] for v in head)] for h in hs]
        if body is None:
            low = 0
            for d in head_image:
                low |= 1 << d
            for mask in masks_by_arity[r_head]:
                spend(1)
                if low & ~mask == 0:
                    rules.append((Atom(idb_name(r_head, mask), head), list(atoms)))
            continue
        r_body = len(body)
        pairs = [(tpl.index[r_body][tuple(h[v] for v in body)], d) for h, d in zip(hs, head_image)]
        for body_mask in masks_by_arity[r_body]:
            if r_body == 0 and body_mask == 0:
                continue  # the goal never occurs in a body
            low = _image_mask(tpl, pairs, body_mask)
            goal_head = r_head == 0
            for mask in masks_by_arity[r_head]:
                spend(1)
                if low & ~mask:
                    continue
                is_goal = goal_head and mask == 0
                if mode == SYMMETRIC_MODE and not is_goal:
                    if _image_mask(tpl, [(d, s) for s, d in pairs], mask) & ~body_mask:
                        continue
                body_atoms = [Atom(idb_name(r_body, body_mask), body)] + list(atoms)
                rules.append((Atom(idb_name(r_head, mask), head), body_atoms))
    program = DatalogProgram.build(b.vocab, idb, rules, GOAL_NAME)
    return CanonicalProgram(program, subscripts, (j, k), mode)


@dataclass
class CanonicalResult:
    accepted: bool
    witness: Derivation | None
    program: DatalogProgram | None
    states_explored: int

    def __iter__(self):
        return iter((self.accepted, self.witness))


def canonical_accept(b: Structure, j: int, k: int, mode: str, a: Structure, *,
                     max_atoms: int | None = None,
                     max_states: int = DEFAULT_MAX_STATES) -> CanonicalResult:
    """Decide whether the canonical (j,k)-program of b accepts a, lazily.

    On acceptance the witness is a derivation over a small program holding
    only the canonical rules the derivation uses.
    """
    _check_params(b, j, k, mode)
    check_vocab(a, b)
    tpl = _Template(b, j)
    size = min(k, a.size)
    windows = [frozenset(w) for w in itertools.combinations(a.domain, size)]
    facts = a.sorted_facts()
    nullary = [f for f in facts if not f[1]]

    variants: dict[frozenset, list[tuple[tuple, list[dict]]]] = {}

    def window_variants(w: frozenset):
        """(atoms, instantiations) for the strongest atom sets inside window w."""
        if w not in variants:
            inside = [f for f in facts if f[1] and set(f[1]) <= w] + nullary
            limit = len(inside) if max_atoms is None else min(max_atoms, len(inside))
            out = []
            elements = sorted(w)
            for chosen in itertools.combinations(inside, limit):
                atoms = [Atom(n, t) for n, t in chosen]
                out.append((tuple(chosen), _instantiations(b, elements, atoms)))
            variants[w] = out
        return variants[w]

    def tuples_over(w: frozenset) -> list[tuple]:
        return [t for r in range(j + 1) for t in itertools.product(sorted(w), repeat=r)]

    pair_cache: dict = {}

    def pairs_for(w, vi, t, s):
        key = (w, vi, t, s)
        if key not in pair_cache:
            hs = window_variants(w)[vi][1]
            pair_cache[key] = sorted({(tpl.index[len(t)][tuple(h[x] for x in t)],
                                       tpl.index[len(s)][tuple(h[x] for x in s)]) for h in hs})
        return pair_cache[key]

    # state -> (previous state, window, variant, tuple) for witness reconstruction
    parent: dict = {}
    queue: deque = deque()
    expanded_intervals: set = set()

    def push(state, origin) -> None:
        if state not in parent:
            parent[state] = origin
            if len(parent) > max_states:
                raise ResourceError(f"canonical acceptance exceeded {max_states} states")
            queue.append(state)

    def finish(state, origin) -> CanonicalResult:
        parent[("goal",)] = (state, origin)
        program, derivation = _witness(tpl, a, parent, window_variants, mode)
        return CanonicalResult(True, derivation, program, len(parent))

    for w in windows:
        for vi, (_, hs) in enumerate(window_variants(w)):
            if not hs:
                return finish(None, (w, vi, ()))
            for s in tuples_over(w):
                low = 0
                for h in hs:
                    low |= 1 << tpl.index[len(s)][tuple(h[x] for x in s)]
                if len(s) == 0 and low == 0:
                    continue
                highs = [low] if mode == LINEAR_MODE else _submasks_between(low, tpl.full_mask(len(s)))
                for mask in highs:
                    push((len(s), mask, s), (None, w, vi))

    while queue:
        state = queue.popleft()
        r, mask, t = state
        for w in windows:
            if not set(t) <= w:
                continue
            for vi, (_, hs) in enumerate(window_variants(w)):
                if all(not mask >> tpl.index[r][tuple(h[x] for x in t)] & 1 for h in hs):
                    return finish(state, (w, vi, t))
                for s in tuples_over(w):
                    pairs = pairs_for(w, vi, t, s)
                    low = _image_mask(tpl, pairs, mask)
                    if mode == LINEAR_MODE:
                        if len(s) == 0 and low == 0:
                            continue
                        push((len(s), low, s), (state, w, vi))
                        continue
                    high = _upper_mask(tpl, pairs, len(s), mask)
                    if low & ~high:
                        continue
                    key = (len(s), low, high, s)
                    if key in expanded_intervals:
                        continue
                    expanded_intervals.add(key)
                    for m in _submasks_between(low, high):
                        if len(s) == 0 and m == 0:
                            continue
                        push((len(s), m, s), (state, w, vi))
    return CanonicalResult(False, None, None, len(parent))


def _witness(tpl: _Template, a: Structure, parent: dict, window_variants, mode: str):
    """Rebuild the chain of states as a derivation over the rules it uses."""
    chain = []
    state, (w, vi, t_last) = parent[("goal",)]
    chain.append((state, None, w, vi))
    while state is not None:
        prev, pw, pvi = parent[state]
        chain.append((prev, state, pw, pvi))
        state = prev
    chain.reverse()
    # chain entries: (body state or None, head state or None for goal, window, variant)
    rules: list[tuple[Atom, list[Atom]]] = []
    steps = []
    names = set()
    for body_state, head_state, w, vi in chain:
        elements = sorted(w)
        var = {x: f"v{i}" for i, x in enumerate(elements)}
        atoms = [Atom(n, tuple(var[x] for x in t)) for n, t in window_variants(w)[vi][0]]
        if head_state is None:
            head = Atom(GOAL_NAME, ())
        else:
            r, mask, s = head_state
            head = Atom(idb_name(r, mask), tuple(var[x] for x in s))
        names.add(head.predicate)
        body = list(atoms)
        if body_state is not None:
            r, mask, t = body_state
            body.insert(0, Atom(idb_name(r, mask), tuple(var[x] for x in t)))
            names.add(body[0].predicate)
        if not body:
            body = atoms
        rules.append((head, body))
        steps.append(Step(len(rules) - 1, {var[x]: x for x in elements
                                           if any(var[x] in at.args for at in [head] + body)}))
    arities = {}
    for n in names | {GOAL_NAME}:
        arities[n] = int(n[1:].split("_")[0])
    idb = Vocabulary(tuple(sorted(arities.items(), key=lambda kv: (kv[1], int(kv[0].split("_")[1])))))
    program = DatalogProgram.build(a.vocab, idb, rules, GOAL_NAME)
    return program, Derivation(tuple(steps))


def materialized_accept(program: CanonicalProgram, a: Structure) -> bool:
    return evaluate(program.base, a, want_witness=False).accepted
