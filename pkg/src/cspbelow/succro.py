"""Successor structures, split operations, monotone branching programs and
the derivation surgery behind the read-once pathwidth bound.

A successor structure has domain ``1..n`` (as the strings ``"1"`` ... ``"n"``)
and carries the built-ins first = {1}, last = {n} and suc = {(i, i+1)} on top
of its ordinary relations. Splits, minimization and the surgery only ever
touch the ordinary relations.
"""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .datalog import (BUILTIN_NAMES, BUILTINS, GOAL, DatalogProgram, Derivation, accepts,
                      derivation_atoms, find_read_once_derivation, validate_derivation)
from .errors import InputError, ResourceError
from .pathscape import PathRepresentation, validate_representation
from .structures import Structure, Vocabulary, homomorphisms

Fact = tuple[str, tuple[str, ...]]
Occurrence = tuple[str, tuple[str, ...], int]


# successor structures

class SuccessorStructure:
    """An ordinary structure on ``1..n`` together with its built-in order."""

    __slots__ = ("base", "n")

    def __init__(self, base: Structure):
        n = base.size
        if set(base.domain) != {str(i) for i in range(1, n + 1)}:
            raise InputError(f"a successor structure needs domain 1..{n}, got {list(base.domain)}")
        clash = BUILTIN_NAMES & set(base.vocab.names)
        if clash:
            raise InputError(f"ordinary vocabulary may not use built-in names {sorted(clash)}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "n", n)

    def __setattr__(self, key, value):
        raise AttributeError("SuccessorStructure is immutable")

    @classmethod
    def from_facts(cls, vocab: Vocabulary, facts: Iterable[Fact], n: int) -> "SuccessorStructure":
        return cls(Structure.from_facts(vocab, facts, domain=range(1, n + 1)))

    @property
    def vocab(self) -> Vocabulary:
        return self.base.vocab

    def builtin_relations(self) -> dict[str, set]:
        n = self.n
        return {"first": {("1",)} if n else set(), "last": {(str(n),)} if n else set(),
                "suc": {(str(i), str(i + 1)) for i in range(1, n)}}

    def full(self) -> Structure:
        """The structure over the ordinary vocabulary plus first, last and suc."""
        relations = dict(self.base.relations)
        relations.update(self.builtin_relations())
        return Structure(self.base.vocab.union(BUILTINS), self.base.domain, relations)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SuccessorStructure) and self.base == other.base

    def __hash__(self) -> int:
        return hash(self.base)

    def __repr__(self) -> str:
        return f"SuccessorStructure(n={self.n}, facts={self.base.tuple_count()})"


def attach_successor(a: Structure, ordering: Mapping[str, int] | Sequence[str]) -> SuccessorStructure:
    """Rename ``a`` onto ``1..n`` through ``ordering`` and add the built-ins.

    ``ordering`` is either a map from elements to positions or a sequence
    listing the elements from first to last.
    """
    if isinstance(ordering, Mapping):
        position = {str(k): int(v) for k, v in ordering.items()}
    else:
        position = {str(x): i for i, x in enumerate(ordering, 1)}
    n = a.size
    if set(position) != set(a.domain):
        raise InputError("ordering must list every element exactly once")
    if sorted(position.values()) != list(range(1, n + 1)):
        raise InputError(f"ordering is not a bijection onto 1..{n}")
    return SuccessorStructure(a.rename({x: str(i) for x, i in position.items()}))


def _plain(a) -> Structure:
    return a.base if isinstance(a, SuccessorStructure) else a


# split operations

def occurrences(a, elem: str) -> list[Occurrence]:
    """All (relation, tuple, position) where ``elem`` occurs; positions count from 0."""
    a = _plain(a)
    out = []
    for name in a.vocab.names:
        for t in sorted(a.relation(name)):
            out.extend((name, t, i) for i, x in enumerate(t) if x == elem)
    return out


def fresh_name(a, elem: str) -> str:
    taken = set(_plain(a).domain)
    name = elem + "'"
    while name in taken:
        name += "'"
    return name


def split(a, elem: str, chosen: Iterable[Occurrence]) -> Structure:
    """Rewrite the chosen occurrences of ``elem`` to a fresh element.

    ``chosen`` must be a strict nonempty subset of ``occurrences(a, elem)``.
    The tuple count never changes, only which element sits where.
    """
    a = _plain(a)
    elem = str(elem)
    if elem not in a.domain:
        raise InputError(f"{elem} is not an element of the structure")
    every = occurrences(a, elem)
    chosen = {(r, tuple(t), int(i)) for r, t, i in chosen}
    if len(every) <= 1:
        raise InputError(f"{elem} occurs {len(every)} time(s); no split applies")
    if not chosen:
        raise InputError("the chosen occurrence set is empty")
    unknown = chosen - set(every)
    if unknown:
        raise InputError(f"not occurrences of {elem}: {sorted(unknown)}")
    if len(chosen) == len(every):
        raise InputError("the chosen occurrence set must be a strict subset")
    new = fresh_name(a, elem)
    positions: dict[Fact, set[int]] = {}
    for r, t, i in chosen:
        positions.setdefault((r, t), set()).add(i)
    relations = {}
    for name in a.vocab.names:
        tuples = set()
        for t in a.relation(name):
            moved = positions.get((name, t))
            tuples.add(tuple(new if i in moved else x for i, x in enumerate(t)) if moved else t)
        relations[name] = tuples
    return Structure(a.vocab, a.domain + (new,), relations)


def single_removals(a) -> Iterator[tuple[str, Structure]]:
    """Every tuple removal, then every element removal, in lexicographic order."""
    a = _plain(a)
    for fact in a.sorted_facts():
        yield f"remove {fact[0]}{fact[1]}", a.without_fact(fact)
    for x in a.domain:
        yield f"remove element {x}", a.without_element(x)


def single_splits(a) -> Iterator[tuple[str, Structure]]:
    """Every single split, by element, then subset size, then lexicographically."""
    a = _plain(a)
    for x in a.domain:
        occ = occurrences(a, x)
        for size in range(1, len(occ)):
            for chosen in itertools.combinations(occ, size):
                yield f"split {x} at {list(chosen)}", split(a, x, chosen)


def minimize_in_class(a, member: Callable[[Structure], bool], *, max_rounds: int = 10_000) -> Structure:
    """Shrink ``a`` by removals and splits while ``member`` keeps accepting.

    Candidates are tried as tuple removals, element removals, then splits,
    restarting after each success. For a class closed under homomorphisms
    the fixpoint is critical and split-minimal, because any longer sequence
    of splits or removals maps to the first single step.
    """
    a = _plain(a)
    if not member(a):
        raise InputError("the starting structure is not in the class")
    for _ in range(max_rounds):
        for _, candidate in itertools.chain(single_removals(a), single_splits(a)):
            if member(candidate):
                a = candidate
                break
        else:
            return a
    raise ResourceError(f"minimization did not settle within {max_rounds} rounds")


def local_minimality_report(a, member: Callable[[Structure], bool]) -> list[str]:
    """Descriptions of single removals or splits that stay in the class."""
    return [desc for desc, c in itertools.chain(single_removals(a), single_splits(a)) if member(c)]


# monotone nondeterministic branching programs

Label = tuple[str, tuple[str, ...]]


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    label: Label | None = None

    def to_json(self) -> dict:
        out: dict = {"from": self.source, "to": self.target}
        if self.label is not None:
            out["label"] = {"rel": self.label[0], "tuple": [int(x) for x in self.label[1]]}
        return out


@dataclass(frozen=True)
class MnBP:
    n: int
    vocab: Vocabulary
    nodes: tuple[str, ...]
    arcs: tuple[Arc, ...]
    s: str = "s"
    t: str = "t"
    diagnostics: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        known = set(self.nodes)
        if len(known) != len(self.nodes):
            raise InputError("duplicate node names")
        if self.s not in known or self.t not in known:
            raise InputError("source and sink must be nodes")
        values = {str(i) for i in range(1, self.n + 1)}
        for arc in self.arcs:
            if arc.source not in known or arc.target not in known:
                raise InputError(f"arc {arc.source}->{arc.target} leaves the node set")
            if arc.label is not None:
                name, t = arc.label
                if name not in self.vocab or self.vocab.arity(name) != len(t):
                    raise InputError(f"label {name}{t} does not fit the vocabulary")
                if not set(t) <= values:
                    raise InputError(f"label {name}{t} uses values outside 1..{self.n}")

    @property
    def size(self) -> int:
        return len(self.nodes)

    def to_json(self) -> dict:
        return {"n": self.n, "vocab": dict(self.vocab.symbols), "nodes": list(self.nodes),
                "arcs": [a.to_json() for a in self.arcs], "s": self.s, "t": self.t}

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data: Mapping) -> "MnBP":
        try:
            vocab = Vocabulary(tuple((str(k), int(v)) for k, v in dict(data["vocab"]).items()))
            arcs = []
            for a in data["arcs"]:
                label = a.get("label")
                if label is not None:
                    label = (str(label["rel"]), tuple(str(x) for x in label["tuple"]))
                arcs.append(Arc(str(a["from"]), str(a["to"]), label))
            return cls(int(data["n"]), vocab, tuple(str(x) for x in data["nodes"]), tuple(arcs),
                       str(data["s"]), str(data["t"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed branching program: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "MnBP":
        try:
            return cls.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InputError(f"branching program is not JSON: {exc}") from exc


@dataclass(frozen=True)
class MnBPResult:
    accepted: bool
    path: tuple[Arc, ...] | None
    read_once: bool

    def __iter__(self):
        return iter((self.accepted, self.path, self.read_once))


def _as_successor(a) -> SuccessorStructure:
    return a if isinstance(a, SuccessorStructure) else SuccessorStructure(a)


def evaluate_mnbp(h: MnBP, a) -> MnBPResult:
    """Breadth-first search for a source-to-sink path in the surviving arcs.

    The returned path is a shortest one; ``read_once`` says whether it
    repeats no label.
    """
    a = _as_successor(a)
    if a.n != h.n:
        raise InputError(f"branching program is for size {h.n}, structure has size {a.n}")
    if a.vocab != h.vocab:
        raise InputError("structure vocabulary differs from the branching program's")
    present = {(name, t) for name in a.vocab.names for t in a.base.relation(name)}
    out: dict[str, list[Arc]] = {}
    for arc in h.arcs:
        if arc.label is None or arc.label in present:
            out.setdefault(arc.source, []).append(arc)
    parent: dict[str, Arc | None] = {h.s: None}
    queue = deque([h.s])
    while queue:
        node = queue.popleft()
        if node == h.t:
            break
        for arc in out.get(node, ()):
            if arc.target not in parent:
                parent[arc.target] = arc
                queue.append(arc.target)
    if h.t not in parent:
        return MnBPResult(False, None, False)
    path = []
    node = h.t
    while parent[node] is not None:
        arc = parent[node]
        path.append(arc)
        node = arc.source
    path.reverse()
    labels = [arc.label for arc in path if arc.label is not None]
    return MnBPResult(True, tuple(path), len(labels) == len(set(labels)))


def _state(name: str, t: Sequence[str]) -> str:
    return f"{name}({','.join(t)})"


def _builtins_hold(p: DatalogProgram, rule, asg: Mapping[str, str], n: int) -> bool:
    for atom in rule.edb_body:
        if not p.is_builtin(atom.predicate):
            continue
        vals = [int(asg[v]) for v in atom.args]
        if atom.predicate == "first" and vals[0] != 1:
            return False
        if atom.predicate == "last" and vals[0] != n:
            return False
        if atom.predicate == "suc" and vals[1] != vals[0] + 1:
            return False
    return True


def compile_to_mnbp(p: DatalogProgram, n: int, *, max_instantiations: int = 2_000_000) -> MnBP:
    """Unfold a linear program over ``1..n`` into a branching program.

    Nodes are s, t and one state per IDB and tuple; each rule instantiation
    whose built-ins hold becomes a chain from its body state to its head
    state with one arc per ordinary EDB atom. Goal rules end in t.
    """
    if not p.is_linear():
        raise InputError("only linear programs compile to branching programs")
    if n < 1:
        raise InputError("input size must be at least 1")
    values = [str(i) for i in range(1, n + 1)]
    nodes = ["s", "t"]
    for name, arity in p.idb_vocab.symbols:
        if name != p.goal:
            nodes.extend(_state(name, t) for t in itertools.product(values, repeat=arity))
    state_nodes = len(nodes)
    arcs: list[Arc] = []
    seen: set = set()
    work = 0
    aux = 0
    for rule in p.rules:
        variables = rule.variables
        for combo in itertools.product(values, repeat=len(variables)):
            work += 1
            if work > max_instantiations:
                raise ResourceError(f"compilation exceeded {max_instantiations} rule instantiations")
            asg = dict(zip(variables, combo))
            if not _builtins_hold(p, rule, asg, n):
                continue
            if rule.idb_body:
                source = _state(*rule.idb_body[0].instantiate(asg))
            else:
                source = "s"
            target = "t" if rule.kind == GOAL else _state(*rule.head.instantiate(asg))
            labels = tuple(a.instantiate(asg) for a in rule.edb_body if not p.is_builtin(a.predicate))
            key = (source, target, labels)
            if key in seen:
                continue
            seen.add(key)
            if not labels:
                arcs.append(Arc(source, target))
                continue
            here = source
            for pos, label in enumerate(labels):
                if pos == len(labels) - 1:
                    there = target
                else:
                    there = f"aux{aux}"
                    aux += 1
                    nodes.append(there)
                arcs.append(Arc(here, there, label))
                here = there
    iota = len(p.idb_vocab)
    kappa = max((a for _, a in p.idb_vocab.symbols), default=0)
    diagnostics = {"idb_count": iota, "max_idb_arity": kappa, "state_nodes": state_nodes,
                   "aux_nodes": aux, "state_bound": 2 + iota * n ** kappa, "arcs": len(arcs)}
    return MnBP(n, p.edb_vocab, tuple(nodes), tuple(arcs), "s", "t", diagnostics)


# cut decompositions

@dataclass(frozen=True)
class CutDecomposition:
    representation: PathRepresentation | None
    violation: int | None

    def to_json(self) -> dict:
        rep = self.representation
        return {"violation": self.violation,
                "bags": None if rep is None else [list(b.domain) for b in rep.bags],
                "params": None if rep is None else list(rep.params)}


def build_cut_decomposition(bags: Sequence[Structure], j: int, k: int) -> CutDecomposition:
    """Widen each bag by the elements that pass over it.

    With prefix unions X and suffix unions Y (bags counted from 1), the
    result is absent when some |X_g & Y_{g+1}| exceeds j, and the least
    such g is reported. Otherwise bag l becomes bag_l plus
    X_{l-1} & Y_{l+1}, a (j, k+j) representation.
    """
    bags = list(bags)
    if not bags:
        raise InputError("need at least one bag")
    big = [i for i, b in enumerate(bags, 1) if b.size > k]
    if big:
        raise InputError(f"bag {big[0]} has more than k={k} elements")
    sets = [set(b.domain) for b in bags]
    w = len(bags)
    prefix = [set()]
    for s in sets:
        prefix.append(prefix[-1] | s)
    suffix = [set() for _ in range(w + 2)]
    for i in range(w, 0, -1):
        suffix[i] = suffix[i + 1] | sets[i - 1]
    for g in range(1, w):
        if len(prefix[g] & suffix[g + 1]) > j:
            return CutDecomposition(None, g)
    widened = []
    for l in range(1, w + 1):
        extra = prefix[l - 1] & suffix[l + 1] if 1 < l < w else set()
        widened.append(bags[l - 1].with_elements(extra))
    rep = PathRepresentation(tuple(widened), (j, k + j))
    ok, problems = validate_representation(rep)
    if not ok:
        raise AssertionError("cut decomposition failed to validate: " + "; ".join(problems))
    return CutDecomposition(rep, None)


# derivation surgery

def split_variant_map(b: Structure, m: Structure) -> dict[str, str] | None:
    """A map showing ``b`` arises from ``m`` by zero or more splits, if any.

    Such a map is a homomorphism onto the non-isolated part of ``m`` that
    is a bijection between the tuple sets; isolated elements are ignored.
    """
    if b.vocab != m.vocab:
        return None
    b = b.induced(b.active_domain())
    m = m.induced(m.active_domain())
    if b.tuple_count() != m.tuple_count() or b.size < m.size:
        return None
    target = m.facts()
    for h in homomorphisms(b, m):
        if set(h.values()) != set(m.domain):
            continue
        image = {(name, tuple(h[x] for x in t)) for name, t in b.facts()}
        if image == target:
            return dict(h)
    return None


def embedders(m: Structure, n: int) -> Iterator[dict[str, str]]:
    """Maps sending the i-th element of ``m`` into the i-th block of ``1..n``."""
    s = m.size
    if s == 0 or n % s:
        raise InputError(f"n={n} must be a positive multiple of |M|={s}")
    width = n // s
    blocks = [range(i * width + 1, (i + 1) * width + 1) for i in range(s)]
    for combo in itertools.product(*blocks):
        yield {x: str(v) for x, v in zip(m.domain, combo)}


@dataclass
class SurgeryTrace:
    n: int
    program_width: tuple[int, int]
    embedders: list[dict[str, str]]
    derivations: list[Derivation]
    distributions: list[list[frozenset]]
    bag_steps: list[list[int]]
    prototypes: list[tuple[frozenset, ...]]
    classes: list[list[int]]
    cut: dict
    prototype_cut: CutDecomposition
    spliced: Derivation
    extracted: Structure
    valid: bool
    problems: list[str]
    accepted: bool
    split_map: dict[str, str] | None

    @property
    def split_variant(self) -> bool:
        return self.split_map is not None

    def to_json(self) -> dict:
        facts = lambda bag: sorted([name, list(t)] for name, t in bag)
        return {
            "n": self.n,
            "width": list(self.program_width),
            "embedders": self.embedders,
            "prototypes": [[facts(bag) for bag in proto] for proto in self.prototypes],
            "classes": self.classes,
            "cut": self.cut,
            "prototype_cut": self.prototype_cut.to_json(),
            "spliced": self.spliced.to_json(),
            "extracted": facts(self.extracted.facts()),
            "valid": self.valid,
            "problems": self.problems,
            "accepted": self.accepted,
            "split_variant": self.split_variant,
            "split_map": self.split_map,
        }


def pruned_distribution(p: DatalogProgram, d: Derivation) -> tuple[list[frozenset], list[int]]:
    """Nonempty per-step sets of ordinary EDB atoms, with the step each came from."""
    bags, steps = [], []
    for pos, atoms in enumerate(derivation_atoms(p, d, include_builtins=False)):
        if atoms:
            bags.append(frozenset(atoms))
            steps.append(pos)
    return bags, steps


def _elements(bags: Iterable[frozenset]) -> set[str]:
    return {x for bag in bags for _, t in bag for x in t}


def _width(p: DatalogProgram) -> tuple[int, int]:
    j = max((a for _, a in p.idb_vocab.symbols), default=0)
    k = max((len(r.variables) for r in p.rules), default=0)
    return j, k


def surgery_experiment(p: DatalogProgram, m: Structure, n: int, *, max_embedders: int = 4096,
                       max_states: int = 200_000) -> SurgeryTrace | None:
    """Cut two read-once derivations at a shared state and glue them.

    Every embedder of ``m`` into ``1..n`` gets a read-once derivation;
    derivations are grouped by prototype, and within the largest class two
    derivations from different embedders are cut at a common bag index
    whose head state agrees and whose extracted structures share at most
    j elements. The cut at the first violation of the prototype's cut
    decomposition is tried first. Returns None when the budget runs out or
    no such pair exists.
    """
    if not p.is_linear():
        raise InputError("surgery needs a linear program")
    if m.vocab != p.edb_vocab:
        raise InputError("structure vocabulary must equal the program's EDB vocabulary")
    s = m.size
    if s == 0 or n % s:
        raise InputError(f"n={n} must be a positive multiple of |M|={s}")
    if (n // s) ** s > max_embedders:
        return None
    j, k = _width(p)
    maps, derivs, dists, steps, protos = [], [], [], [], []
    for phi in embedders(m, n):
        a = SuccessorStructure(Structure(m.vocab, range(1, n + 1),
                                         {name: {tuple(phi[x] for x in t) for t in m.relation(name)}
                                          for name in m.vocab.names}))
        try:
            d = find_read_once_derivation(p, a, max_states=max_states)
        except ResourceError:
            d = None
        if d is None:
            continue
        bags, at = pruned_distribution(p, d)
        back = {v: x for x, v in phi.items()}
        maps.append(phi)
        derivs.append(d)
        dists.append(bags)
        steps.append(at)
        protos.append(tuple(frozenset((name, tuple(back[x] for x in t)) for name, t in bag)
                            for bag in bags))
    groups: dict[tuple, list[int]] = {}
    for i, proto in enumerate(protos):
        groups.setdefault(proto, []).append(i)
    classes = sorted(groups.values(), key=lambda c: (-len(c), c[0]))
    for members in classes:
        proto = protos[members[0]]
        w = len(proto)
        if w == 0:
            continue
        proto_bags = [Structure.from_facts(m.vocab, bag) for bag in proto]
        proto_cut = build_cut_decomposition(proto_bags, j, max(b.size for b in proto_bags))
        order = list(range(1, w + 1))
        if proto_cut.violation is not None:
            order.remove(proto_cut.violation)
            order.insert(0, proto_cut.violation)
        used = {i: _elements(dists[i]) for i in members}
        for g in order:
            for left in members:
                for right in members:
                    if left == right:
                        continue
                    ls, rs = steps[left][g - 1], steps[right][g - 1]
                    lrule = p.rules[derivs[left].steps[ls].rule]
                    rrule = p.rules[derivs[right].steps[rs].rule]
                    lhead = lrule.head.instantiate(derivs[left].steps[ls].assignment)
                    rhead = rrule.head.instantiate(derivs[right].steps[rs].assignment)
                    if lhead != rhead:
                        continue
                    overlap = len(used[left] & used[right])
                    if overlap > j:
                        continue
                    spliced = Derivation(derivs[left].steps[:ls + 1] + derivs[right].steps[rs + 1:])
                    return _finish(p, m, n, (j, k), maps, derivs, dists, steps, protos, classes,
                                   proto_cut, spliced,
                                   {"g": g, "idb": lhead[0], "tuple": list(lhead[1]),
                                    "left": left, "right": right, "left_step": ls,
                                    "right_step": rs, "overlap": overlap})
    return None


def _finish(p, m, n, width, maps, derivs, dists, steps, protos, classes, proto_cut, spliced, cut
            ) -> SurgeryTrace:
    facts = [f for atoms in derivation_atoms(p, spliced, include_builtins=False) for f in atoms]
    extracted = Structure.from_facts(p.edb_vocab, facts)
    host = SuccessorStructure(extracted.with_elements(str(i) for i in range(1, n + 1)))
    valid, problems = validate_derivation(p, spliced, host)
    return SurgeryTrace(n, width, maps, derivs, dists, steps, protos, classes, cut, proto_cut,
                        spliced, extracted, valid, problems, accepts(p, host),
                        split_variant_map(extracted, m))
