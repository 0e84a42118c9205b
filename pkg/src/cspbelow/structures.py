"""Finite relational structures, homomorphism search, cores and polymorphisms.

Elements are opaque strings; wherever an order is needed (domains, search
order, tie-breaking) it is plain lexicographic string order.
"""
from __future__ import annotations

import itertools
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import InputError, ParseError, ResourceError

Fact = tuple[str, tuple[str, ...]]

DEFAULT_MAX_NODES = 1_000_000
DEFAULT_MAX_CORE_SIZE = 12

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*$")


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        symbols = tuple((str(n), int(a)) for n, a in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        names = [n for n, _ in symbols]
        if len(set(names)) != len(names):
            raise InputError(f"duplicate relation symbol in {names}")
        for name, arity in symbols:
            if not _IDENT.match(name):
                raise InputError(f"bad relation symbol {name!r}")
            if arity < 0:
                raise InputError(f"negative arity for {name}")

    @classmethod
    def of(cls, **arities: int) -> "Vocabulary":
        return cls(tuple(arities.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.symbols)

    def arity(self, name: str) -> int:
        for n, a in self.symbols:
            if n == name:
                return a
        raise InputError(f"unknown relation symbol {name!r}")

    def __contains__(self, name: object) -> bool:
        return any(n == name for n, _ in self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def union(self, other: "Vocabulary") -> "Vocabulary":
        merged = list(self.symbols)
        for name, arity in other.symbols:
            if name in self:
                if self.arity(name) != arity:
                    raise InputError(f"arity clash for {name}")
            else:
                merged.append((name, arity))
        return Vocabulary(tuple(merged))

    def without(self, names: Iterable[str]) -> "Vocabulary":
        drop = set(names)
        return Vocabulary(tuple(s for s in self.symbols if s[0] not in drop))


class Structure:
    """Immutable finite structure: a vocabulary, a domain and one tuple set per symbol."""

    __slots__ = ("vocab", "domain", "_relations", "_hash")

    def __init__(self, vocab: Vocabulary, domain: Iterable = (),
                 relations: Mapping[str, Iterable[Sequence]] | None = None):
        relations = dict(relations or {})
        unknown = set(relations) - set(vocab.names)
        if unknown:
            raise InputError(f"relations {sorted(unknown)} not in vocabulary")
        dom = frozenset(str(x) for x in domain)
        rel: dict[str, frozenset[tuple[str, ...]]] = {}
        for name, arity in vocab.symbols:
            tuples = set()
            for t in relations.get(name, ()):
                t = tuple(str(x) for x in t)
                if len(t) != arity:
                    raise InputError(f"tuple {t} has wrong arity for {name}/{arity}")
                missing = [x for x in t if x not in dom]
                if missing:
                    raise InputError(f"tuple {name}{t} uses non-domain elements {missing}")
                tuples.add(t)
            rel[name] = frozenset(tuples)
        object.__setattr__(self, "vocab", vocab)
        object.__setattr__(self, "domain", tuple(sorted(dom)))
        object.__setattr__(self, "_relations", rel)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, key, value):
        raise AttributeError("Structure is immutable")

    @classmethod
    def from_facts(cls, vocab: Vocabulary, facts: Iterable[Fact],
                   domain: Iterable | None = None) -> "Structure":
        relations: dict[str, set] = {}
        elements = set()
        for name, t in facts:
            relations.setdefault(name, set()).add(tuple(t))
            elements.update(str(x) for x in t)
        if domain is not None:
            elements.update(str(x) for x in domain)
        return cls(vocab, elements, relations)

    def relation(self, name: str) -> frozenset[tuple[str, ...]]:
        if name not in self._relations:
            raise InputError(f"unknown relation symbol {name!r}")
        return self._relations[name]

    __getitem__ = relation

    @property
    def relations(self) -> dict[str, frozenset[tuple[str, ...]]]:
        return dict(self._relations)

    def facts(self) -> frozenset[Fact]:
        """The tuple-structure view: all (symbol, tuple) pairs."""
        return frozenset((n, t) for n, ts in self._relations.items() for t in ts)

    def sorted_facts(self) -> list[Fact]:
        order = {n: i for i, n in enumerate(self.vocab.names)}
        return sorted(self.facts(), key=lambda f: (order[f[0]], f[1]))

    @property
    def size(self) -> int:
        return len(self.domain)

    def __len__(self) -> int:
        return len(self.domain)

    def tuple_count(self) -> int:
        return sum(len(ts) for ts in self._relations.values())

    def active_domain(self) -> frozenset[str]:
        return frozenset(x for _, t in self.facts() for x in t)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Structure):
            return NotImplemented
        return (self.vocab == other.vocab and self.domain == other.domain
                and self._relations == other._relations)

    def __hash__(self) -> int:
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self.vocab, self.domain, self.facts())))
        return self._hash

    def __repr__(self) -> str:
        rels = ", ".join(f"{n}={sorted(ts)}" for n, ts in self._relations.items())
        return f"Structure(domain={list(self.domain)}, {rels})"

    # derived structures

    def rename(self, mapping: Mapping[str, str]) -> "Structure":
        """Image under a total map on the domain; non-injective maps quotient."""
        missing = [x for x in self.domain if x not in mapping]
        if missing:
            raise InputError(f"rename map is not total, missing {missing}")
        return Structure(self.vocab, (mapping[x] for x in self.domain),
                         {n: [tuple(mapping[x] for x in t) for t in ts]
                          for n, ts in self._relations.items()})

    def induced(self, elements: Iterable[str]) -> "Structure":
        keep = frozenset(elements) & frozenset(self.domain)
        return Structure(self.vocab, keep,
                         {n: [t for t in ts if all(x in keep for x in t)]
                          for n, ts in self._relations.items()})

    def with_elements(self, extra: Iterable) -> "Structure":
        return Structure(self.vocab, itertools.chain(self.domain, extra), self._relations)

    def with_facts(self, facts: Iterable[Fact]) -> "Structure":
        rel = {n: set(ts) for n, ts in self._relations.items()}
        extra = set()
        for name, t in facts:
            rel[name].add(tuple(t))
            extra.update(t)
        return Structure(self.vocab, itertools.chain(self.domain, extra), rel)

    def without_fact(self, fact: Fact) -> "Structure":
        name, t = fact
        rel = dict(self._relations)
        rel[name] = rel[name] - {tuple(t)}
        return Structure(self.vocab, self.domain, rel)

    def without_element(self, element: str) -> "Structure":
        return self.induced(x for x in self.domain if x != element)

    def with_relations(self, relations: Mapping[str, Iterable[Sequence]]) -> "Structure":
        """Same domain with some relations replaced; only the new tuples are checked."""
        rel = dict(self._relations)
        dom = frozenset(self.domain)
        for name, tuples in relations.items():
            arity = self.vocab.arity(name)
            checked = frozenset(tuple(str(x) for x in t) for t in tuples)
            for t in checked:
                if len(t) != arity or not dom.issuperset(t):
                    raise InputError(f"tuple {name}{t} does not fit the structure")
            rel[name] = checked
        out = object.__new__(Structure)
        object.__setattr__(out, "vocab", self.vocab)
        object.__setattr__(out, "domain", self.domain)
        object.__setattr__(out, "_relations", rel)
        object.__setattr__(out, "_hash", None)
        return out

    def restrict(self, vocab: Vocabulary) -> "Structure":
        return Structure(vocab, self.domain, {n: self._relations[n] for n in vocab.names})

    def expand(self, vocab: Vocabulary, relations: Mapping[str, Iterable] | None = None) -> "Structure":
        rel: dict = dict(self._relations)
        rel.update(relations or {})
        return Structure(self.vocab.union(vocab), self.domain, rel)


def digraph(edges: Iterable[tuple], vertices: Iterable = (), symbol: str = "E") -> Structure:
    edges = [tuple(str(x) for x in e) for e in edges]
    dom = set(str(v) for v in vertices) | {x for e in edges for x in e}
    return Structure(Vocabulary(((symbol, 2),)), dom, {symbol: edges})


def check_vocab(a: Structure, b: Structure) -> None:
    if a.vocab != b.vocab:
        raise InputError(f"vocabulary mismatch: {a.vocab.symbols} vs {b.vocab.symbols}")


@dataclass(frozen=True)
class Homomorphism:
    source: Structure
    target: Structure
    mapping: dict = field(hash=False)

    def __getitem__(self, element: str) -> str:
        return self.mapping[element]

    def violations(self) -> list[str]:
        return homomorphism_violations(self.mapping, self.source, self.target)

    def is_valid(self) -> bool:
        return not self.violations()

    def then(self, other: "Homomorphism") -> "Homomorphism":
        """Composition: first self, then other."""
        return Homomorphism(self.source, other.target,
                            {x: other.mapping[y] for x, y in self.mapping.items()})


def homomorphism_violations(mapping: Mapping[str, str], a: Structure, b: Structure) -> list[str]:
    problems = []
    if a.vocab != b.vocab:
        return ["vocabulary mismatch"]
    for x in a.domain:
        if x not in mapping:
            problems.append(f"{x} is unmapped")
        elif mapping[x] not in b.domain:
            problems.append(f"{x} maps outside the target domain")
    if problems:
        return problems
    for name, t in a.sorted_facts():
        image = tuple(mapping[x] for x in t)
        if image not in b.relation(name):
            problems.append(f"{name}{t} maps to {name}{image}, which is absent")
    return problems


def is_homomorphism(mapping: Mapping[str, str], a: Structure, b: Structure) -> bool:
    return not homomorphism_violations(mapping, a, b)


def homomorphisms(a: Structure, b: Structure, *, injective: bool = False,
                  fixed: Mapping[str, str] | None = None,
                  candidates: Mapping[str, Iterable[str]] | None = None,
                  max_nodes: int = DEFAULT_MAX_NODES) -> Iterator[dict[str, str]]:
    """Enumerate all homomorphisms a -> b in a deterministic order.

    Backtracking with smallest-domain-first variable choice and forward
    pruning through every constraint touching the assigned element.
    Raises ResourceError once more than max_nodes assignments were tried.
    """
    check_vocab(a, b)
    fixed = dict(fixed or {})
    constraints: list[tuple[str, tuple[str, ...]]] = []
    for name in a.vocab.names:
        target = b.relation(name)
        for t in sorted(a.relation(name)):
            if not t:
                if () not in target:
                    return
                continue
            constraints.append((name, t))

    variables = list(a.domain)
    rank = {v: i for i, v in enumerate(variables)}
    doms = {v: set(b.domain) for v in variables}
    for v, allowed in (candidates or {}).items():
        if v in doms:
            doms[v] &= set(allowed)
    for v, val in fixed.items():
        if v not in doms:
            raise InputError(f"fixed element {v} not in source domain")
        doms[v] &= {val}

    positions: list[dict[str, list[int]]] = []
    options: list[list[tuple[str, ...]]] = []
    by_var: dict[str, list[int]] = {v: [] for v in variables}
    for ci, (name, t) in enumerate(constraints):
        pos: dict[str, list[int]] = {}
        for i, x in enumerate(t):
            pos.setdefault(x, []).append(i)
        opts = [u for u in sorted(b.relation(name))
                if all(len({u[i] for i in ps}) == 1 for ps in pos.values())]
        positions.append(pos)
        options.append(opts)
        for x in pos:
            by_var[x].append(ci)
            doms[x] &= {u[pos[x][0]] for u in opts}
    if any(not d for d in doms.values()):
        return
    if injective and len(variables) > len(b.domain):
        return

    counter = [0]
    assignment: dict[str, str] = {}
    used: set[str] = set()

    def rec(doms, live) -> Iterator[dict[str, str]]:
        if len(assignment) == len(variables):
            yield dict(assignment)
            return
        v = min((u for u in variables if u not in assignment),
                key=lambda u: (len(doms[u]), rank[u]))
        for val in sorted(doms[v]):
            if injective and val in used:
                continue
            counter[0] += 1
            if counter[0] > max_nodes:
                raise ResourceError(f"homomorphism search exceeded {max_nodes} nodes")
            new_doms = dict(doms)
            new_doms[v] = {val}
            new_live = dict(live)
            ok = True
            for ci in by_var[v]:
                pv = positions[ci][v]
                opts = [u for u in new_live[ci] if all(u[i] == val for i in pv)]
                if not opts:
                    ok = False
                    break
                new_live[ci] = opts
                for w, pw in positions[ci].items():
                    if w == v or w in assignment:
                        continue
                    narrowed = new_doms[w] & {u[pw[0]] for u in opts}
                    if not narrowed:
                        ok = False
                        break
                    new_doms[w] = narrowed
                if not ok:
                    break
            if not ok:
                continue
            assignment[v] = val
            used.add(val)
            yield from rec(new_doms, new_live)
            del assignment[v]
            used.discard(val)

    yield from rec(doms, dict(enumerate(options)))


def find_homomorphism(a: Structure, b: Structure, **kwargs) -> Homomorphism | None:
    for mapping in homomorphisms(a, b, **kwargs):
        return Homomorphism(a, b, mapping)
    return None


def maps_to(a: Structure, b: Structure, **kwargs) -> bool:
    return find_homomorphism(a, b, **kwargs) is not None


def union_structures(a: Structure, b: Structure) -> Structure:
    """Union; shared element names are identified."""
    check_vocab(a, b)
    return Structure(a.vocab, itertools.chain(a.domain, b.domain),
                     {n: a.relation(n) | b.relation(n) for n in a.vocab.names})


def degree_signature(s: Structure, element: str) -> frozenset:
    counts: Counter = Counter()
    for name, t in s.facts():
        for i, x in enumerate(t):
            if x == element:
                counts[(name, i)] += 1
    return frozenset(counts.items())


def isomorphisms(a: Structure, b: Structure, max_nodes: int = DEFAULT_MAX_NODES) -> Iterator[dict[str, str]]:
    check_vocab(a, b)
    if a.size != b.size or any(len(a[n]) != len(b[n]) for n in a.vocab.names):
        return
    sig_b: dict[frozenset, list[str]] = {}
    for y in b.domain:
        sig_b.setdefault(degree_signature(b, y), []).append(y)
    cands = {x: sig_b.get(degree_signature(a, x), []) for x in a.domain}
    yield from homomorphisms(a, b, injective=True, candidates=cands, max_nodes=max_nodes)


def find_isomorphism(a: Structure, b: Structure, **kwargs) -> Homomorphism | None:
    for mapping in isomorphisms(a, b, **kwargs):
        return Homomorphism(a, b, mapping)
    return None


def are_isomorphic(a: Structure, b: Structure) -> bool:
    return a.vocab == b.vocab and find_isomorphism(a, b) is not None


def automorphisms(a: Structure) -> Iterator[dict[str, str]]:
    return isomorphisms(a, a)


def is_core(a: Structure, max_size: int = DEFAULT_MAX_CORE_SIZE) -> bool:
    if a.size > max_size:
        raise ResourceError(f"core check limited to {max_size} elements")
    return all(not maps_to(a, a.without_element(x)) for x in a.domain)


def core_of(a: Structure, max_size: int = DEFAULT_MAX_CORE_SIZE) -> tuple[Structure, Homomorphism]:
    """Return a core of a and a retraction onto it.

    Elements are dropped greedily in lexicographic order whenever the current
    structure maps into the induced substructure without them.
    """
    if a.size == 0:
        raise InputError("core of an empty structure is undefined")
    if a.size > max_size:
        raise ResourceError(f"core computation limited to {max_size} elements")
    current = a
    total = {x: x for x in a.domain}
    shrunk = True
    while shrunk:
        shrunk = False
        for x in current.domain:
            smaller = current.without_element(x)
            h = find_homomorphism(current, smaller)
            if h is not None:
                total = {y: h.mapping[total[y]] for y in a.domain}
                current = smaller
                shrunk = True
                break
    # total restricted to the core is an automorphism; undo it so the map retracts
    restricted = {x: total[x] for x in current.domain}
    inverse = {v: k for k, v in restricted.items()}
    retraction = {x: inverse[total[x]] for x in a.domain}
    return current, Homomorphism(a, current, retraction)


@dataclass(frozen=True)
class Operation:
    domain_set: tuple[str, ...]
    arity: int
    table: dict = field(hash=False)

    def __post_init__(self):
        dom = tuple(sorted(str(x) for x in self.domain_set))
        object.__setattr__(self, "domain_set", dom)
        if self.arity < 1:
            raise InputError("operation arity must be positive")
        table = {tuple(str(x) for x in k): str(v) for k, v in self.table.items()}
        for args in itertools.product(dom, repeat=self.arity):
            if args not in table:
                raise InputError(f"operation table is not total: missing {args}")
            if table[args] not in dom:
                raise InputError(f"operation value {table[args]} outside the domain")
        object.__setattr__(self, "table", table)

    @classmethod
    def from_function(cls, domain_set: Iterable, arity: int, fn: Callable[..., object]) -> "Operation":
        dom = [str(x) for x in domain_set]
        return cls(tuple(dom), arity, {args: str(fn(*args)) for args in itertools.product(dom, repeat=arity)})

    def __call__(self, *args: str) -> str:
        return self.table[tuple(args)]


def projection(domain_set: Iterable, arity: int, index: int) -> Operation:
    return Operation.from_function(domain_set, arity, lambda *xs: xs[index])


def preserves_relation(op: Operation, s: Structure, symbol: str) -> bool:
    """True iff applying op row-wise to any op.arity tuples of the relation stays inside it."""
    if tuple(s.domain) != op.domain_set:
        raise InputError("operation domain differs from the structure domain")
    rel = s.relation(symbol)
    width = s.vocab.arity(symbol)
    for columns in itertools.product(sorted(rel), repeat=op.arity):
        image = tuple(op(*(c[i] for c in columns)) for i in range(width))
        if image not in rel:
            return False
    return True


def is_polymorphism(op: Operation, s: Structure) -> bool:
    return all(preserves_relation(op, s, name) for name in s.vocab.names)


def is_maltsev(op: Operation) -> bool:
    if op.arity != 3:
        raise InputError("a Maltsev operation is ternary")
    return all(op(x, y, y) == x and op(y, y, x) == x
               for x in op.domain_set for y in op.domain_set)


# text format

_TUPLE = re.compile(r"\(([^()]*)\)")


def parse_structure(text: str) -> Structure:
    """Parse the line-based structure format ('domain:' line, then 'R/k:' lines)."""
    domain: list[str] | None = None
    symbols: list[tuple[str, int]] = []
    relations: dict[str, list[tuple[str, ...]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        if not sep:
            raise ParseError("expected ':'", lineno, len(raw) + 1)
        head = head.strip()
        if head == "domain":
            if domain is not None:
                raise ParseError("duplicate domain line", lineno, 1)
            domain = rest.split()
            continue
        if head == "bags":
            break
        m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_']*)\s*/\s*(\d+)", head)
        if not m:
            raise ParseError(f"bad symbol declaration {head!r}", lineno, 1)
        name, arity = m.group(1), int(m.group(2))
        if name in relations:
            raise ParseError(f"duplicate symbol {name}", lineno, 1)
        symbols.append((name, arity))
        tuples = []
        leftover = _TUPLE.sub(" ", rest)
        if leftover.strip():
            col = raw.find(leftover.strip()) + 1
            raise ParseError(f"unexpected text {leftover.strip()!r}", lineno, col)
        for tm in _TUPLE.finditer(rest):
            body = tm.group(1).strip()
            items = tuple(x.strip() for x in body.split(",")) if body else ()
            if len(items) != arity:
                raise ParseError(f"tuple ({body}) has arity {len(items)}, expected {arity}",
                                 lineno, raw.find(tm.group(0)) + 1)
            tuples.append(items)
        relations[name] = tuples
    if domain is None:
        raise ParseError("missing 'domain:' line", 1, 1)
    try:
        return Structure(Vocabulary(tuple(symbols)), domain, relations)
    except InputError as exc:
        raise ParseError(str(exc)) from exc


def format_structure(s: Structure) -> str:
    lines = ["domain: " + " ".join(s.domain)]
    for name, arity in s.vocab.symbols:
        tuples = " ".join("(" + ",".join(t) + ")" for t in sorted(s.relation(name)))
        lines.append(f"{name}/{arity}:" + (" " + tuples if tuples else ""))
    return "\n".join(lines) + "\n"
