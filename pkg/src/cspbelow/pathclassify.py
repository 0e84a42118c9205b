"""Shapes of oriented paths: waves, staircases, NL witnesses and the <= gadget."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from .errors import InputError
from .pathscape import OrientedPath
from .structures import (Structure, automorphisms, digraph, find_homomorphism,
                         homomorphisms, is_core, maps_to)

DIRECTED, WAVE, STAIRCASE, OTHER = "directed", "wave", "staircase", "other"


def _path(p) -> OrientedPath:
    return OrientedPath(p) if isinstance(p, str) else p


def _runs(word: str) -> list[tuple[str, int]]:
    return [(c, len(list(g))) for c, g in itertools.groupby(word)]


@dataclass(frozen=True)
class PathShape:
    kind: str
    params: dict = field(default_factory=dict)
    segments: tuple = ()

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params, "segments": [list(s) for s in self.segments]}


def wave_word(r: int, ell: int) -> str:
    """E1 (P Pbar)^r P E2 with P a forward directed path of length ell."""
    return "F" + ("F" * ell + "B" * ell) * r + "F" * ell + "F"


def _as_wave(word: str) -> tuple[int, int] | None:
    runs = _runs(word)
    if len(runs) < 3 or runs[0][0] != "F" or runs[-1][0] != "F":
        return None
    ell = runs[1][1]
    inner = runs[1:-1]
    if runs[0][1] != ell + 1 or runs[-1][1] != ell + 1:
        return None
    if any(n != ell for _, n in inner):
        return None
    r = (len(inner) + 1) // 2
    return (r, ell) if wave_word(r, ell) == word else None


def _staircase(word: str):
    """Split into P1 W1 P2 ... Wn-1 Pn; returns the segment list or None."""
    runs = _runs(word)
    if runs[0][0] != "F" or runs[-1][0] != "F":
        return None
    # runs alternate F,B,F,...,F; every B run sits inside some monotone wave,
    # an interior F run either separates two waves or continues the current one
    levels = [0]
    for c, n in runs:
        levels.append(levels[-1] + (n if c == "F" else -n))
    b_runs = [i for i, (c, _) in enumerate(runs) if c == "B"]

    def wave_info(first: int, last: int):
        ell = runs[first][1]
        if any(runs[i][1] != ell for i in range(first, last + 1)):
            return None
        peak = levels[first]
        return peak - ell, peak

    def search(start_b: int, prev):
        if start_b == len(b_runs):
            return []
        first = b_runs[start_b]
        for end_b in range(start_b, len(b_runs)):
            last = b_runs[end_b]
            info = wave_info(first, last)
            if info is None:
                break
            if prev is not None and not (prev[0] < info[0] and prev[1] < info[1]):
                continue
            rest = search(end_b + 1, info)
            if rest is not None:
                return [(first, last, info)] + rest
        return None

    waves = search(0, None)
    if waves is None:
        return None
    segments = []
    pos = 0
    cursor = 0
    for first, last, (trough, peak) in waves:
        f_len = sum(n for _, n in runs[cursor:first])
        w_len = sum(n for _, n in runs[first:last + 1])
        segments.append(("P", word[pos:pos + f_len]))
        pos += f_len
        segments.append(("W", word[pos:pos + w_len], trough, peak))
        pos += w_len
        cursor = last + 1
    segments.append(("P", word[pos:]))
    if "".join(s[1] for s in segments) != word or any(not s[1] for s in segments if s[0] == "P"):
        return None
    return segments


def classify_path_shape(p: OrientedPath | str) -> PathShape:
    """Most specific of directed, wave, staircase, other."""
    p = _path(p)
    if p.directed:
        return PathShape(DIRECTED, {"length": len(p)}, (("P", p.word),))
    if not p.minimal:
        return PathShape(OTHER)
    word = p.from_bottom().word
    wave = _as_wave(word)
    if wave is not None:
        r, ell = wave
        return PathShape(WAVE, {"r": r, "ell": ell, "oriented": word},
                         (("E1", "F"), ("P", "F" * ell), ("PbarP^r", ("B" * ell + "F" * ell) * r), ("E2", "F")))
    segments = _staircase(word)
    if segments is not None:
        return PathShape(STAIRCASE, {"waves": sum(1 for s in segments if s[0] == "W"), "oriented": word},
                         tuple(segments))
    return PathShape(OTHER)


# common lower bounds of two minimal paths

def common_path(p1: OrientedPath | str, p2: OrientedPath | str, max_len: int = 64) -> OrientedPath | None:
    """Shortest minimal q with q -> p1 and q -> p2 (a walk in the product digraph)."""
    p1, p2 = _path(p1), _path(p2)
    for p in (p1, p2):
        if not p.minimal:
            raise InputError(f"{p.word} is not minimal")
    if p1.height != p2.height:
        raise InputError(f"heights differ: {p1.height} vs {p2.height}")
    a, b = p1.from_bottom(), p2.from_bottom()

    def moves(path: OrientedPath, i: int):
        out = []
        if i < len(path.word):
            out.append((path.word[i], i + 1))
        if i > 0:
            out.append(("B" if path.word[i - 1] == "F" else "F", i - 1))
        return out

    start, goal = (0, 0), (len(a.word), len(b.word))
    parent = {start: None}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if state == goal:
            break
        i, j = state
        for c1, i2 in moves(a, i):
            for c2, j2 in moves(b, j):
                if c1 == c2 and (i2, j2) not in parent:
                    parent[(i2, j2)] = (state, c1)
                    queue.append((i2, j2))
    if goal not in parent:
        return None
    letters = []
    state = goal
    while parent[state] is not None:
        state, c = parent[state]
        letters.append(c)
    word = "".join(reversed(letters))
    if len(word) > max_len:
        return None
    q = OrientedPath(word)
    assert q.minimal and maps_to(q.structure(), a.structure()) and maps_to(q.structure(), b.structure())
    return q


# NL witnesses and the <= gadget

@dataclass(frozen=True)
class NlWitness:
    split: tuple[int, int, int, int]
    q: OrientedPath
    height: int
    certificates: dict

    def parts(self, b: OrientedPath) -> tuple[str, str, str]:
        i, j, k, l = self.split
        return b.word[i:j], b.word[j:k], b.word[k:l]


def _witness_certificates(parts, q: OrientedPath):
    s1, s2, s3 = (OrientedPath(x).structure() for x in parts)
    h1 = find_homomorphism(q.structure(), s1)
    h3 = find_homomorphism(q.structure(), s3)
    if h1 is None or h3 is None or maps_to(q.structure(), s2):
        return None
    return {"q_to_p1": h1.mapping, "q_to_p3": h3.mapping, "q_to_p2": None}


def minimal_words(height: int, max_len: int):
    """Minimal words of the given height that start at the bottom, shortest first."""
    for n in range(height, max_len + 1):
        for letters in itertools.product("FB", repeat=n):
            w = "".join(letters)
            p = OrientedPath(w)
            if p.height == height and p.minimal and p.levels[0] == 0:
                yield p


def check_witness(b: OrientedPath | str, w: NlWitness) -> bool:
    b = _path(b)
    parts = w.parts(b)
    paths = [OrientedPath(x) for x in parts]
    if not all(p.minimal and p.height == w.height for p in paths):
        return False
    if not (w.q.minimal and w.q.height == w.height):
        return False
    return _witness_certificates(parts, w.q) is not None


def nl_witness_search(b: OrientedPath | str, max_q_len: int = 8, require_core: bool = True
                      ) -> NlWitness | None:
    """First split P1 P2 P3 of b with a q mapping to P1 and P3 but not P2."""
    b = _path(b)
    if require_core and not is_core(b.structure(), max_size=max(12, len(b) + 1)):
        raise InputError(f"{b.word} is not a core")
    word = b.word
    n = len(word)
    for i in range(n):
        for len2 in range(1, n - i):
            for len1 in range(1, n - i - len2):
                j, k = i + len1, i + len1 + len2
                p1, p2 = OrientedPath(word[i:j]), OrientedPath(word[j:k])
                if not (p1.minimal and p2.minimal and p1.height == p2.height):
                    continue
                for l in range(k + 1, n + 1):
                    p3 = OrientedPath(word[k:l])
                    if not (p3.minimal and p3.height == p1.height):
                        continue
                    for q in minimal_words(p1.height, max_q_len):
                        certs = _witness_certificates((p1.word, p2.word, p3.word), q)
                        if certs is not None:
                            return NlWitness((i, j, k, l), q, p1.height, certs)
    return None


@dataclass(frozen=True)
class Gadget:
    structure: Structure
    x: str
    y: str
    labels: dict
    projection: frozenset
    verified: bool


LEQ = frozenset({("0", "0"), ("0", "1"), ("1", "1")})


def _converse(s: Structure) -> Structure:
    return digraph([(v, u) for u, v in s.relation("E")], s.domain)


def build_leq_gadget(b: OrientedPath | str, w: NlWitness) -> Gadget:
    """Gadget G with {(h(x), h(y)) : h: G -> b} = R<=, checked by enumerating every h."""
    b = _path(b)
    if not check_witness(b, w):
        raise InputError("witness does not re-validate")
    i, j, k, l = w.split
    mirrored = b.levels[i] > b.levels[j]
    word = b.word.translate(str.maketrans("FB", "BF")) if mirrored else b.word
    parts = (word[i:j], word[j:k], word[k:l])
    edges = []

    def add_path(p: OrientedPath, prefix: str, rename: dict) -> tuple[str, str]:
        """Add p read from its bottom; return (bottom, top) names."""
        p = p.from_bottom()
        names = [rename.get(t, f"{prefix}{t}") for t in range(len(p.word) + 1)]
        for t, c in enumerate(p.word):
            edges.append((names[t], names[t + 1]) if c == "F" else (names[t + 1], names[t]))
        return names[0], names[-1]

    # the copy of b keeps b's vertex names
    copy = OrientedPath(word)
    for t, c in enumerate(copy.word):
        u, v = f"v{t}", f"v{t + 1}"
        edges.append((u, v) if c == "F" else (v, u))
    c_vertex = f"v{k}"
    p23 = common_path(parts[1], parts[2])
    p123 = common_path(common_path(parts[0], parts[1]), parts[2])
    q = w.q if not mirrored else OrientedPath(w.q.word.translate(str.maketrans("FB", "BF")))
    if p23 is None or p123 is None:
        raise InputError("no common lower bound for the witness parts")
    top = "top"
    add_path(p23, "m", {0: c_vertex, len(p23.word): top})
    x, _ = add_path(q, "q", {len(q.from_bottom().word): top})
    y, _ = add_path(p123, "r", {len(p123.word): top})
    g = digraph(edges)
    target = OrientedPath(word).structure()
    labels = {f"v{i}": "0", f"v{k}": "1"}
    projection = set()
    for h in homomorphisms(g, target):
        projection.add((labels.get(h[x], h[x]), labels.get(h[y], h[y])))
    if mirrored:
        g = _converse(g)
    projection = frozenset(projection)
    return Gadget(g, x, y, labels, projection, projection == LEQ)


# wave obstructions

@dataclass(frozen=True)
class Obstruction:
    path: OrientedPath
    form: int


@dataclass(frozen=True)
class WaveObstructions:
    wave: OrientedPath
    r: int
    ell: int
    emitted: tuple[Obstruction, ...]
    taller_than: int

    def covers(self, p: OrientedPath | str) -> bool:
        """True iff the obstruction set certifies p does not map to the wave."""
        p = _path(p)
        if p.height > self.taller_than:
            return True
        s = p.structure()
        return any(maps_to(o.path.structure(), s) for o in self.emitted)


def _low_phases(p: OrientedPath, h: int) -> int | None:
    """Count low phases of a minimal path of height h+2 read from the bottom."""
    levels = p.levels
    phases, high = 0, False
    for lev in levels[1:-1]:
        if not high and lev == h + 1:
            phases += 1
            high = True
        elif high and lev == 1:
            high = False
    return phases if high else None


def wave_obstructions(q: OrientedPath | str, max_len: int = 10) -> WaveObstructions:
    """Minimal height h+2 obstructions for an r-wave, labelled Form m for m <= r low phases.

    Paths taller than h+2 are covered by the marker ``taller_than`` rather than listed.
    """
    q = _path(q)
    shape = classify_path_shape(q)
    if shape.kind != WAVE:
        raise InputError(f"{q.word} is not a wave")
    r, ell = shape.params["r"], shape.params["ell"]
    h = ell
    target = q.structure()
    emitted = []
    for p in minimal_words(h + 2, max_len):
        m = _low_phases(p, h)
        if m is None or m > r:
            continue
        if maps_to(p.structure(), target):
            raise AssertionError(f"emitted {p.word} maps to the wave")
        emitted.append(Obstruction(p, m))
    return WaveObstructions(q, r, ell, tuple(emitted), h + 2)


def is_rigid_path(p: OrientedPath | str) -> bool:
    p = _path(p)
    s = p.structure()
    if not is_core(s, max_size=max(12, s.size)):
        raise InputError(f"{p.word} is not a core")
    return sum(1 for _ in itertools.islice(automorphisms(s), 2)) == 1
