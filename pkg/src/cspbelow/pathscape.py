"""Path representations, oriented paths and the zigzag operator.

A path representation is a sequence of bags (substructures). Zigzagging a
representation along a minimal oriented path lays a fresh copy of bag
``lev(e)`` on every edge ``e`` and glues neighbouring copies on the shared
interface, so the result follows the ups and downs of the path.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError, ParseError, ResourceError
from .structures import (Homomorphism, Operation, Structure, Vocabulary, digraph,
                         is_maltsev, parse_structure, preserves_relation)


# representations

@dataclass(frozen=True)
class PathRepresentation:
    bags: tuple[Structure, ...]
    params: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "bags", tuple(self.bags))
        if not self.bags:
            raise InputError("a path representation needs at least one bag")
        vocab = self.bags[0].vocab
        if any(b.vocab != vocab for b in self.bags):
            raise InputError("bags must share one vocabulary")

    def __len__(self) -> int:
        return len(self.bags)

    @property
    def vocab(self) -> Vocabulary:
        return self.bags[0].vocab

    def union(self) -> Structure:
        elements = set()
        relations: dict[str, set] = {n: set() for n in self.vocab.names}
        for bag in self.bags:
            elements.update(bag.domain)
            for name in self.vocab.names:
                relations[name] |= bag.relation(name)
        return Structure(self.vocab, elements, relations)

    def realized_params(self) -> tuple[int, int]:
        """Smallest (j, k) this bag sequence satisfies."""
        k = max(b.size for b in self.bags)
        j = max((len(set(x.domain) & set(y.domain)) for x, y in zip(self.bags, self.bags[1:])), default=0)
        return j, k

    @classmethod
    def from_element_sets(cls, whole: Structure, sets: Iterable[Iterable[str]],
                          params: tuple[int, int] | None = None) -> "PathRepresentation":
        bags = [whole.induced(s) for s in sets]
        rep = cls(tuple(bags), params or (0, 0))
        if params is None:
            rep = cls(rep.bags, rep.realized_params())
        return rep


def validate_representation(rep: PathRepresentation, whole: Structure | None = None
                            ) -> tuple[bool, list[str]]:
    """Check persistence, the (j,k) size bounds and, optionally, the union."""
    problems = []
    j, k = rep.params
    first: dict[str, int] = {}
    last: dict[str, int] = {}
    for i, bag in enumerate(rep.bags):
        for x in bag.domain:
            first.setdefault(x, i)
            last[x] = i
    for x in sorted(first):
        gaps = [i for i in range(first[x], last[x] + 1) if x not in rep.bags[i].domain]
        if gaps:
            problems.append(f"element {x} is in bags {first[x]} and {last[x]} but not in bag {gaps[0]}")
    for i, bag in enumerate(rep.bags):
        if bag.size > k:
            problems.append(f"bag {i} has {bag.size} > k={k} elements")
    for i, (x, y) in enumerate(zip(rep.bags, rep.bags[1:])):
        shared = len(set(x.domain) & set(y.domain))
        if shared > j:
            problems.append(f"bags {i} and {i + 1} share {shared} > j={j} elements")
    if whole is not None:
        union = rep.union()
        if union.vocab != whole.vocab:
            problems.append("vocabulary differs from the whole structure")
        elif union != whole:
            problems.append("union of the bags differs from the whole structure")
    return not problems, problems


def parse_representation(text: str, params: tuple[int, int] | None = None
                         ) -> tuple[Structure, PathRepresentation]:
    """A structure file followed by a line ``bags: [a b] [b c] ...``."""
    whole = parse_structure(text)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line.startswith("bags:"):
            rest = line[len("bags:"):]
            sets = []
            depth_open = False
            current: list[str] = []
            for token in rest.replace("[", " [ ").replace("]", " ] ").split():
                if token == "[":
                    if depth_open:
                        raise ParseError("nested '[' in bags line", lineno, raw.find("[") + 1)
                    depth_open, current = True, []
                elif token == "]":
                    if not depth_open:
                        raise ParseError("unbalanced ']' in bags line", lineno, raw.find("]") + 1)
                    depth_open = False
                    sets.append(current)
                elif depth_open:
                    current.append(token)
                else:
                    raise ParseError(f"element {token!r} outside brackets", lineno, raw.find(token) + 1)
            if depth_open:
                raise ParseError("unterminated '[' in bags line", lineno, len(raw) + 1)
            unknown = sorted({x for s in sets for x in s} - set(whole.domain))
            if unknown:
                raise ParseError(f"bag elements {unknown} are not in the domain", lineno, 1)
            bags = tuple(whole.induced(s) for s in sets)
            if not bags:
                raise ParseError("empty bags line", lineno, 1)
            rep = PathRepresentation(bags, (0, 0))
            return whole, PathRepresentation(bags, params or rep.realized_params())
    raise ParseError("missing 'bags:' line", len(text.splitlines()) or 1, 1)


def format_bags(rep: PathRepresentation) -> str:
    return "bags: " + " ".join("[" + " ".join(b.domain) + "]" for b in rep.bags)


def edge_representation(word: str) -> tuple[Structure, PathRepresentation]:
    """The oriented path of ``word`` with one two-element bag per edge."""
    path = OrientedPath(word)
    s = path.structure()
    bags = tuple(s.induced(e) for e in path.edges())
    return s, PathRepresentation(bags, (1, 2))


# oriented paths

class OrientedPath:
    """An oriented path given by its edge orientations; vertices are v0..v{q+1}."""

    def __init__(self, word: str):
        if not isinstance(word, str) or not word or set(word) - {"F", "B"}:
            raise InputError(f"oriented path word must be a nonempty string over F/B, got {word!r}")
        self.word = word
        raw = [0]
        for c in word:
            raw.append(raw[-1] + (1 if c == "F" else -1))
        low = min(raw)
        self.levels = [x - low for x in raw]
        self.height = max(self.levels)

    def __len__(self) -> int:
        return len(self.word)

    def __repr__(self) -> str:
        return f"OrientedPath({self.word!r})"

    @property
    def vertices(self) -> list[str]:
        return [f"v{i}" for i in range(len(self.word) + 1)]

    def edges(self) -> list[tuple[str, str]]:
        v = self.vertices
        return [(v[i], v[i + 1]) if c == "F" else (v[i + 1], v[i]) for i, c in enumerate(self.word)]

    def edge_level(self, i: int) -> int:
        """Level of the start vertex of edge i."""
        return self.levels[i] if self.word[i] == "F" else self.levels[i + 1]

    def edge_levels(self) -> list[int]:
        return [self.edge_level(i) for i in range(len(self.word))]

    @property
    def minimal(self) -> bool:
        bottom = [i for i, x in enumerate(self.levels) if x == 0]
        top = [i for i, x in enumerate(self.levels) if x == self.height]
        ends = {0, len(self.word)}
        return len(bottom) == 1 and len(top) == 1 and bottom[0] in ends and top[0] in ends

    @property
    def directed(self) -> bool:
        return len(set(self.word)) == 1

    def structure(self) -> Structure:
        return digraph(self.edges(), self.vertices)

    def reversed(self) -> "OrientedPath":
        """The same digraph read from the other end."""
        return OrientedPath(self.word[::-1].translate(str.maketrans("FB", "BF")))

    def from_bottom(self) -> "OrientedPath":
        """The reading that starts at the lowest endpoint (ties keep the word)."""
        if self.levels[-1] < self.levels[0]:
            return self.reversed()
        return self


def analyze_oriented_path(word: str) -> tuple[list[int], int, bool]:
    p = OrientedPath(word)
    return p.levels, p.height, p.minimal


def path_word_of(s: Structure, symbol: str = "E") -> str:
    """Read a digraph that is an oriented path back into an F/B word."""
    edges = s.relation(symbol)
    if any(a == b for a, b in edges):
        raise InputError("a loop is not an oriented path")
    neighbours: dict[str, list[str]] = {x: [] for x in s.domain}
    for a, b in edges:
        neighbours[a].append(b)
        neighbours[b].append(a)
    if len(edges) != s.size - 1 or any(len(set(ns)) != len(ns) for ns in neighbours.values()):
        raise InputError("structure is not an oriented path")
    if s.size == 1:
        raise InputError("a single vertex has no edges")
    ends = [x for x, ns in neighbours.items() if len(ns) == 1]
    if len(ends) != 2 or any(len(ns) > 2 for ns in neighbours.values()):
        raise InputError("structure is not an oriented path")
    words = []
    for start in ends:
        prev, cur, letters = None, start, []
        while True:
            nxt = [y for y in neighbours[cur] if y != prev]
            if not nxt:
                break
            y = nxt[0]
            letters.append("F" if (cur, y) in edges else "B")
            prev, cur = cur, y
        if len(letters) != len(edges):
            raise InputError("structure is not connected")
        words.append("".join(letters))
    return max(words)


# zigzag

@dataclass(frozen=True)
class ZigzagResult:
    word: str
    bags: tuple[Structure, ...]
    isos: tuple[dict, ...]
    pair_levels: tuple[int, ...]
    params: tuple[int, int]

    def representation(self) -> PathRepresentation:
        return PathRepresentation(self.bags, self.params)

    def union(self) -> Structure:
        return self.representation().union()

    def to_json(self) -> dict:
        return {"word": self.word,
                "bags": [{"domain": list(b.domain),
                          "relations": {n: sorted(list(t) for t in b.relation(n)) for n in b.vocab.names}}
                         for b in self.bags],
                "isos": [dict(sorted(i.items())) for i in self.isos],
                "pair_levels": list(self.pair_levels)}


def _require_minimal(p: OrientedPath) -> None:
    if not p.minimal:
        raise InputError(f"oriented path {p.word} is not minimal")


def zigzag(rep: PathRepresentation, p: OrientedPath | str) -> ZigzagResult:
    """Lay a copy of bag lev(e_i) on each edge e_i of p and glue neighbours."""
    if isinstance(p, str):
        p = OrientedPath(p)
    _require_minimal(p)
    if p.height != len(rep):
        raise InputError(f"path height {p.height} differs from representation length {len(rep)}")
    levels = p.edge_levels()
    bags: list[Structure] = []
    isos: list[dict] = []
    pair_levels: list[int] = []
    for i, lev in enumerate(levels):
        source = rep.bags[lev]
        to_copy = {a: f"{a}@{i}" for a in source.domain}
        if i:
            # the shared vertex of e_{i-1} and e_i sits at vertex level pair + 1
            pair = lev - 1 if p.word[i] == "F" else lev
            pair_levels.append(pair)
            interface = set(rep.bags[pair].domain) & set(rep.bags[pair + 1].domain)
            back = {orig: x for x, orig in isos[-1].items()}
            for a in interface:
                to_copy[a] = back[a]
        bags.append(source.rename(to_copy))
        isos.append({x: a for a, x in to_copy.items()})
    return ZigzagResult(p.word, tuple(bags), tuple(isos), tuple(pair_levels), rep.params)


def projection_hom(z: ZigzagResult, rep: PathRepresentation) -> Homomorphism:
    """Send every copy back to its original."""
    mapping: dict[str, str] = {}
    for iso in z.isos:
        for x, a in iso.items():
            if mapping.setdefault(x, a) != a:
                raise InputError(f"element {x} has two originals")
    return Homomorphism(z.union(), rep.union(), mapping)


# filters and regrouping

@dataclass(frozen=True)
class Filter:
    delimiters: tuple[tuple[int, int], ...]
    params: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "delimiters", tuple((int(s), int(t)) for s, t in self.delimiters))


def filter_violations(f: Filter, rep: PathRepresentation) -> list[str]:
    c, d = f.params
    n = len(rep)
    problems = []
    if len(f.delimiters) > c:
        problems.append(f"{len(f.delimiters)} delimiters exceed c={c}")
    for i, (s, t) in enumerate(f.delimiters):
        if not 0 <= s <= t <= n - 1:
            problems.append(f"delimiter [{s},{t}] is out of range for {n} bags")
            continue
        covered = set().union(*(rep.bags[x].domain for x in range(s, t + 1)))
        if len(covered) > d:
            problems.append(f"delimiter [{s},{t}] covers {len(covered)} > d={d} elements")
        if i and f.delimiters[i - 1][1] + 2 > s:
            problems.append(f"delimiter [{s},{t}] starts too close to the previous one")
    return problems


def obeys_filter(p: OrientedPath | str, f: Filter) -> bool:
    """Edges whose level falls in each delimiter must form one directed subpath."""
    if isinstance(p, str):
        p = OrientedPath(p)
    levels = p.edge_levels()
    for s, t in f.delimiters:
        idx = [i for i, x in enumerate(levels) if s <= x <= t]
        if not idx:
            continue
        if idx != list(range(idx[0], idx[-1] + 1)):
            return False
        if len({p.word[i] for i in idx}) != 1:
            return False
    return True


@dataclass(frozen=True)
class RegroupResult:
    representation: PathRepresentation
    overlap: frozenset
    complement: tuple[tuple[int, int], ...]
    columns: tuple[frozenset, ...]


def regroup(rep: PathRepresentation, f: Filter) -> RegroupResult:
    """Stack all delimiter bags into one bag, then interleave the gaps between them."""
    problems = filter_violations(f, rep)
    if problems:
        raise InputError("invalid filter: " + "; ".join(problems))
    n = len(rep)
    dels = sorted(f.delimiters)
    starts = [0] + [t + 1 for _, t in dels]
    ends = [s - 1 for s, _ in dels] + [n - 1]
    complement = tuple((a, b) for a, b in zip(starts, ends) if a <= b)

    def elements(lo: int, hi: int) -> set:
        return set().union(*(rep.bags[i].domain for i in range(lo, hi + 1))) if lo <= hi else set()

    columns = []
    if dels and dels[0][0] > 0:
        columns.append(elements(0, dels[0][0] - 1))
    if not dels:
        columns.append(elements(0, n - 1))
    for idx, (s, t) in enumerate(dels):
        nxt = dels[idx + 1][0] - 1 if idx + 1 < len(dels) else n - 1
        columns.append(elements(s, nxt))
    overlap = set()
    for x, y in itertools.combinations(columns, 2):
        overlap |= x & y

    whole = rep.union()
    longest = max((b - a + 1 for a, b in complement), default=0)
    # each new bag is the union of a group of old bags plus the overlap elements
    groups = [[i for s, t in dels for i in range(s, t + 1)]]
    for ell in range(1, longest + 1):
        groups.append([a + ell - 1 for a, b in complement if a + ell - 1 <= b])
    bags = []
    for group in groups:
        if not group:
            continue
        elements_here = set(overlap)
        relations: dict[str, set] = {name: set() for name in whole.vocab.names}
        for i in group:
            elements_here |= set(rep.bags[i].domain)
            for name in whole.vocab.names:
                relations[name] |= rep.bags[i].relation(name)
        bags.append(Structure(whole.vocab, elements_here, relations))
    out = PathRepresentation(tuple(bags), (0, 0))
    out = PathRepresentation(out.bags, out.realized_params())
    return RegroupResult(out, frozenset(overlap), complement, tuple(frozenset(c) for c in columns))


# pathwidth search

def decide_pathwidth(s: Structure, j: int, k: int, max_size: int = 8,
                     max_states: int = 2_000_000) -> PathRepresentation | None:
    """A (j,k)-representation of s built from induced bags, or None if none exists."""
    if s.size > max_size:
        raise ResourceError(f"pathwidth search is limited to {max_size} elements, got {s.size}")
    if s.size == 0:
        return PathRepresentation((s,), (j, k))
    if s.size <= k:
        return PathRepresentation((s,), (j, k))
    elements = s.domain
    facts = [set(t) for _, t in s.sorted_facts()]
    contains = {x: [f for f in facts if x in f] for x in elements}
    candidates = [frozenset(c) for size in range(1, k + 1) for c in itertools.combinations(elements, size)]
    everything = frozenset(elements)
    seen_states: set = set()

    def can_forget(x, seen) -> bool:
        return all(f <= seen for f in contains[x])

    def search(seen: frozenset, bag: frozenset, path: list) -> list | None:
        if seen == everything:
            return path
        state = (seen, bag)
        if state in seen_states:
            return None
        seen_states.add(state)
        if len(seen_states) > max_states:
            raise ResourceError(f"pathwidth search exceeded {max_states} states")
        forgotten = seen - bag
        for nxt in candidates:
            if nxt == bag or nxt & forgotten or len(nxt & bag) > j:
                continue
            new_seen = seen | nxt
            if not nxt - seen and not bag - nxt:
                continue
            if not all(can_forget(x, seen) for x in bag - nxt):
                continue
            found = search(new_seen, nxt, path + [nxt])
            if found is not None:
                return found
        return None

    for first in candidates:
        found = search(first, first, [first])
        if found is not None:
            return PathRepresentation(tuple(s.induced(b) for b in found), (j, k))
    return None


# N-digraphs and the Maltsev step

def find_n_digraph(p: OrientedPath | str) -> tuple[int, int] | None:
    """Leftmost (start, s) of a subword F^s B^s F^s (or B^s F^s B^s read from the top)."""
    if isinstance(p, str):
        p = OrientedPath(p)
    _require_minimal(p)
    if p.directed:
        return None
    w = p.word
    up, down = ("F", "B") if p.levels[0] == 0 else ("B", "F")
    for start in range(len(w)):
        for s in range(1, (len(w) - start) // 3 + 1):
            if w[start:start + 3 * s] == up * s + down * s + up * s:
                return start, s
    raise AssertionError(f"minimal path {w} has no N-digraph")


def maltsev_unzigzag(rep: PathRepresentation, p: OrientedPath | str, hom: Homomorphism,
                     m: Operation) -> tuple[OrientedPath, Homomorphism]:
    """Replace one N-digraph of p by a directed path and rebuild the homomorphism.

    On the replaced window every element d gets m(d1, d2, d3), where d1, d2, d3
    are the hom-images of the copies of d's original on the three edges of the
    N-digraph at the same level, leftmost first.
    """
    if isinstance(p, str):
        p = OrientedPath(p)
    if not is_maltsev(m):
        raise InputError("operation is not a Maltsev operation")
    target = hom.target
    if set(m.domain_set) != set(target.domain):
        raise InputError("operation domain differs from the template domain")
    z = zigzag(rep, p)
    problems = Homomorphism(z.union(), target, hom.mapping).violations()
    if problems:
        raise InputError("given map is not a homomorphism from the zigzag: " + problems[0])
    found = find_n_digraph(p)
    if found is None:
        raise InputError(f"{p.word} is directed and has no N-digraph")
    t, s = found
    new_word = p.word[:t] + p.word[t] * s + p.word[t + 3 * s:]
    p2 = OrientedPath(new_word)
    z2 = zigzag(rep, p2)
    old_levels = p.edge_levels()
    new_levels = p2.edge_levels()
    window_old = range(t, t + 3 * s)
    gamma: dict[str, str] = {}

    def assign(x: str, value: str) -> None:
        if gamma.setdefault(x, value) != value:
            raise AssertionError(f"conflicting values for {x}")

    for i, iso in enumerate(z2.isos):
        if i < t:
            for x in iso:
                assign(x, hom.mapping[x])
        elif i >= t + s:
            old = {a: y for y, a in z.isos[i + 2 * s].items()}
            for x, a in iso.items():
                assign(x, hom.mapping[old[a]])
    for i in range(t, t + s):
        same = [e for e in window_old if old_levels[e] == new_levels[i]]
        if len(same) != 3:
            raise AssertionError("N-digraph window does not have three edges per level")
        copies = [{a: y for y, a in z.isos[e].items()} for e in same]
        for x, a in z2.isos[i].items():
            assign(x, m(*(hom.mapping[c[a]] for c in copies)))
    result = Homomorphism(z2.union(), target, gamma)
    problems = result.violations()
    if problems:
        raise AssertionError("rebuilt map is not a homomorphism: " + problems[0])
    return p2, result


def maltsev_pipeline(rep: PathRepresentation, p: OrientedPath | str, hom: Homomorphism,
                     m: Operation) -> Homomorphism:
    """Remove N-digraphs until the path is directed, then read off a hom rep.union() -> target."""
    if isinstance(p, str):
        p = OrientedPath(p)
    while not p.directed:
        p, hom = maltsev_unzigzag(rep, p, hom, m)
    z = zigzag(rep, p)
    proj = projection_hom(z, rep)
    # on a directed path every original has exactly one copy
    inverse = {a: x for x, a in proj.mapping.items()}
    mapping = {a: hom.mapping[inverse[a]] for a in rep.union().domain}
    out = Homomorphism(rep.union(), hom.target, mapping)
    problems = out.violations()
    if problems:
        raise AssertionError("pipeline result is not a homomorphism: " + problems[0])
    return out
