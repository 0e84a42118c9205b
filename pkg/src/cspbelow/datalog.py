"""Datalog programs: parsing, fragment classification, evaluation with provenance,
and analyses of linear derivations.

Program text looks like::

    edb E/2, S/1, T/1.
    idb I/1, G/0.
    goal G.
    I(x) :- S(x).
    I(y) :- I(x), E(x,y).
    G :- I(x), T(x).

The successor built-ins first/1, last/1 and suc/2 may be used in rule bodies
without being declared.
"""
from __future__ import annotations

import functools
import itertools
import json
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import InputError, ParseError, ResourceError
from .structures import Structure, Vocabulary

BUILTINS = Vocabulary((("first", 1), ("last", 1), ("suc", 2)))
BUILTIN_NAMES = frozenset(BUILTINS.names)

NONRECURSIVE, RECURSIVE, GOAL = "nonrecursive", "recursive", "goal"
GENERAL, LINEAR, SYMMETRIC = "general", "linear", "symmetric"


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(self.args)})"

    def instantiate(self, assignment: Mapping[str, str]) -> tuple[str, tuple[str, ...]]:
        return self.predicate, tuple(assignment[v] for v in self.args)


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Atom, ...]
    kind: str
    idb_body: tuple[Atom, ...]
    edb_body: tuple[Atom, ...]

    @functools.cached_property
    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for atom in (self.head,) + self.body:
            for v in atom.args:
                seen.setdefault(v, None)
        return tuple(seen)

    def __str__(self) -> str:
        return f"{self.head} :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class DatalogProgram:
    edb_vocab: Vocabulary
    idb_vocab: Vocabulary
    rules: tuple[Rule, ...]
    goal: str
    builtins_used: frozenset = frozenset()

    @classmethod
    def build(cls, edb: Vocabulary, idb: Vocabulary, rules: Iterable[tuple[Atom, Sequence[Atom]]],
              goal: str) -> "DatalogProgram":
        """Assemble a program from atoms, checking declarations and arities."""
        if goal not in idb or idb.arity(goal) != 0:
            raise InputError(f"goal {goal} must be a declared 0-ary IDB")
        for name in edb.names:
            if name in idb:
                raise InputError(f"{name} declared both EDB and IDB")
        built = []
        used = set()
        for head, body in rules:
            body = tuple(body)
            if head.predicate not in idb:
                raise InputError(f"rule head {head} is not an IDB")
            if not body:
                raise InputError(f"rule for {head} has an empty body")
            for atom in (head,) + body:
                _check_atom(atom, edb, idb)
                if atom.predicate in BUILTIN_NAMES and atom.predicate not in edb:
                    used.add(atom.predicate)
            if any(atom.predicate == goal for atom in body):
                raise InputError(f"goal {goal} may not occur in a rule body")
            idb_body = tuple(x for x in body if x.predicate in idb)
            edb_body = tuple(x for x in body if x.predicate not in idb)
            kind = GOAL if head.predicate == goal else (RECURSIVE if idb_body else NONRECURSIVE)
            built.append(Rule(head, body, kind, idb_body, edb_body))
        return cls(edb, idb, tuple(built), goal, frozenset(used))

    @functools.cached_property
    def input_vocab(self) -> Vocabulary:
        """EDB vocabulary plus the built-ins the rules mention."""
        extra = tuple(s for s in BUILTINS.symbols if s[0] in self.builtins_used)
        return self.edb_vocab.union(Vocabulary(extra))

    @functools.cached_property
    def join_plans(self) -> tuple:
        """Per rule, the EDB join order once its IDB atoms are matched."""
        return tuple(_join_plan(r.edb_body, (v for a in r.idb_body for v in a.args)) for r in self.rules)

    def is_builtin(self, predicate: str) -> bool:
        return predicate in BUILTIN_NAMES and predicate not in self.edb_vocab

    def is_linear(self) -> bool:
        return all(len(r.idb_body) <= 1 for r in self.rules)

    def __str__(self) -> str:
        return format_program(self)


def _check_atom(atom: Atom, edb: Vocabulary, idb: Vocabulary) -> None:
    name = atom.predicate
    if name in idb:
        arity = idb.arity(name)
    elif name in edb:
        arity = edb.arity(name)
    elif name in BUILTIN_NAMES:
        arity = BUILTINS.arity(name)
    else:
        raise InputError(f"undeclared predicate {name}")
    if len(atom.args) != arity:
        raise InputError(f"{atom} has arity {len(atom.args)}, {name} is declared /{arity}")


# parsing

_TOKEN = re.compile(r"\s+|[#%][^\n]*|:-|[A-Za-z_][A-Za-z0-9_']*|\d+|[(),./]|.", re.S)


def _tokens(text: str) -> list[tuple[str, int, int]]:
    out = []
    line, col = 1, 1
    for m in _TOKEN.finditer(text):
        tok = m.group(0)
        if not tok.isspace() and tok[0] not in "#%":
            out.append((tok, line, col))
        for ch in tok:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
    out.append(("<eof>", line, col))
    return out


def parse_program(text: str) -> DatalogProgram:
    toks = _tokens(text)
    pos = 0

    def peek() -> tuple[str, int, int]:
        return toks[pos]

    def take(expected: str | None = None) -> tuple[str, int, int]:
        nonlocal pos
        tok = toks[pos]
        if expected is not None and tok[0] != expected:
            raise ParseError(f"expected {expected!r}, found {tok[0]!r}", tok[1], tok[2])
        pos += 1
        return tok

    def ident() -> tuple[str, int, int]:
        tok = take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", tok[0]):
            raise ParseError(f"expected identifier, found {tok[0]!r}", tok[1], tok[2])
        return tok

    def decls() -> list[tuple[str, int]]:
        out = []
        while True:
            name = ident()[0]
            take("/")
            num = take()
            if not num[0].isdigit():
                raise ParseError(f"expected arity, found {num[0]!r}", num[1], num[2])
            out.append((name, int(num[0])))
            if peek()[0] == ",":
                take(",")
                continue
            take(".")
            return out

    def atom() -> tuple[Atom, int, int]:
        name, line, col = ident()
        args: list[str] = []
        if peek()[0] == "(":
            take("(")
            if peek()[0] != ")":
                while True:
                    args.append(ident()[0])
                    if peek()[0] == ",":
                        take(",")
                        continue
                    break
            take(")")
        return Atom(name, tuple(args)), line, col

    edb: list[tuple[str, int]] = []
    idb: list[tuple[str, int]] = []
    goal: tuple[str, int, int] | None = None
    raw_rules: list[tuple[tuple[Atom, int, int], list[tuple[Atom, int, int]]]] = []
    while peek()[0] != "<eof>":
        word = peek()[0]
        if word == "edb" and toks[pos + 1][0] != "(":
            take()
            edb.extend(decls())
        elif word == "idb" and toks[pos + 1][0] != "(":
            take()
            idb.extend(decls())
        elif word == "goal" and toks[pos + 1][0] not in ("(", ":-"):
            take()
            goal = ident()
            take(".")
        else:
            head = atom()
            take(":-")
            body = [atom()]
            while peek()[0] == ",":
                take(",")
                body.append(atom())
            take(".")
            raw_rules.append((head, body))

    if goal is None:
        tok = peek()
        raise ParseError("missing goal declaration", tok[1], tok[2])
    if not raw_rules:
        raise ParseError("program has no rules, so it accepts nothing", goal[1], goal[2])
    try:
        edb_v, idb_v = Vocabulary(tuple(edb)), Vocabulary(tuple(idb))
    except InputError as exc:
        raise ParseError(str(exc), 1, 1) from exc
    if goal[0] not in idb_v:
        raise ParseError(f"goal {goal[0]} is not a declared IDB", goal[1], goal[2])
    for (h, hl, hc), body in raw_rules:
        for a, line, col in [(h, hl, hc)] + body:
            try:
                _check_atom(a, edb_v, idb_v)
            except InputError as exc:
                raise ParseError(str(exc), line, col) from exc
        if h.predicate not in idb_v:
            raise ParseError(f"rule head {h.predicate} is not an IDB", hl, hc)
        for a, line, col in body:
            if a.predicate == goal[0]:
                raise ParseError(f"goal {goal[0]} may not occur in a rule body", line, col)
    try:
        return DatalogProgram.build(edb_v, idb_v,
                                    [(h[0], [b[0] for b in body]) for h, body in raw_rules],
                                    goal[0])
    except InputError as exc:
        raise ParseError(str(exc), goal[1], goal[2]) from exc


def format_program(p: DatalogProgram) -> str:
    lines = []
    if p.edb_vocab.symbols:
        lines.append("edb " + ", ".join(f"{n}/{a}" for n, a in p.edb_vocab.symbols) + ".")
    lines.append("idb " + ", ".join(f"{n}/{a}" for n, a in p.idb_vocab.symbols) + ".")
    lines.append(f"goal {p.goal}.")
    lines.extend(str(r) for r in p.rules)
    return "\n".join(lines) + "\n"


# fragment classification

@dataclass(frozen=True)
class FragmentReport:
    fragment: str
    width: tuple[int, int]
    missing_symmetric_pairs: tuple[int, ...] = ()


def _pair_matches(r: Rule, s: Rule) -> bool:
    """Is s the symmetric pair of r, up to a consistent renaming of variables?"""
    (rj,) = r.idb_body
    (sj,) = s.idb_body
    if (r.head.predicate, rj.predicate) != (sj.predicate, s.head.predicate):
        return False
    if len(r.variables) != len(s.variables) or len(r.edb_body) != len(s.edb_body):
        return False
    forced: dict[str, str] = {}
    for src, dst in ((r.head, sj), (rj, s.head)):
        for x, y in zip(src.args, dst.args):
            if forced.setdefault(x, y) != y:
                return False
    if len(set(forced.values())) != len(forced):
        return False
    target = Counter(s.edb_body)
    free_src = [v for v in r.variables if v not in forced]
    free_dst = [v for v in s.variables if v not in set(forced.values())]
    for perm in itertools.permutations(free_dst):
        renaming = dict(forced)
        renaming.update(zip(free_src, perm))
        image = Counter(Atom(a.predicate, tuple(renaming[v] for v in a.args)) for a in r.edb_body)
        if image == target:
            return True
    return False


def classify_fragment(p: DatalogProgram) -> FragmentReport:
    idb_arity = max((a for _, a in p.idb_vocab.symbols), default=0)
    width = (idb_arity, max((len(r.variables) for r in p.rules), default=0))
    linear = p.is_linear()
    candidates = [i for i, r in enumerate(p.rules) if r.kind == RECURSIVE and len(r.idb_body) == 1]
    by_key: dict[tuple, list[int]] = {}
    for i in candidates:
        r = p.rules[i]
        by_key.setdefault((r.head.predicate, r.idb_body[0].predicate), []).append(i)
    missing = tuple(i for i in candidates
                    if not any(_pair_matches(p.rules[i], p.rules[k]) for k in
                               by_key.get((p.rules[i].idb_body[0].predicate, p.rules[i].head.predicate), ())))
    if not linear:
        return FragmentReport(GENERAL, width, missing)
    return FragmentReport(SYMMETRIC if not missing else LINEAR, width, missing)


# derivations

@dataclass(frozen=True)
class Step:
    rule: int
    assignment: dict = field(hash=False)


@dataclass(frozen=True)
class Derivation:
    steps: tuple[Step, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def to_json(self) -> list[dict]:
        return [{"rule": s.rule, "assignment": dict(sorted(s.assignment.items()))} for s in self.steps]

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data: Sequence[Mapping]) -> "Derivation":
        return cls(tuple(Step(int(d["rule"]), {str(k): str(v) for k, v in d["assignment"].items()})
                         for d in data))

    @classmethod
    def loads(cls, text: str) -> "Derivation":
        return cls.from_json(json.loads(text))


def derivation_atoms(p: DatalogProgram, d: Derivation, *, include_builtins: bool = True
                     ) -> list[list[tuple[str, tuple[str, ...]]]]:
    """Instantiated EDB atoms per step (built-ins optional)."""
    out = []
    for step in d.steps:
        rule = p.rules[step.rule]
        out.append([a.instantiate(step.assignment) for a in rule.edb_body
                    if include_builtins or not p.is_builtin(a.predicate)])
    return out


def validate_derivation(p: DatalogProgram, d: Derivation, a: Structure | None = None
                        ) -> tuple[bool, list[str]]:
    problems: list[str] = []
    if not d.steps:
        return False, ["derivation is empty"]
    for pos, step in enumerate(d.steps):
        if not 0 <= step.rule < len(p.rules):
            problems.append(f"step {pos}: rule index {step.rule} out of range")
            continue
        rule = p.rules[step.rule]
        wanted, given = set(rule.variables), set(step.assignment)
        if wanted - given:
            problems.append(f"step {pos}: variables {sorted(wanted - given)} unassigned")
        if given - wanted:
            problems.append(f"step {pos}: assignment has extra variables {sorted(given - wanted)}")
        if len(rule.idb_body) > 1:
            problems.append(f"step {pos}: rule {step.rule} is not linear")
    if problems:
        return False, problems
    rules = [p.rules[s.rule] for s in d.steps]
    if rules[0].idb_body:
        problems.append("step 0: first rule has an IDB in its body")
    if rules[-1].kind != GOAL:
        problems.append(f"step {len(rules) - 1}: last rule is not a goal rule")
    for pos in range(len(rules) - 1):
        head = rules[pos].head
        nxt = rules[pos + 1]
        if not nxt.idb_body:
            problems.append(f"step {pos + 1}: rule has no IDB body atom to chain with")
            continue
        body = nxt.idb_body[0]
        if head.predicate != body.predicate:
            problems.append(f"chaining at {pos}->{pos + 1}: head {head.predicate} "
                            f"differs from body {body.predicate}")
            continue
        left = head.instantiate(d.steps[pos].assignment)[1]
        right = body.instantiate(d.steps[pos + 1].assignment)[1]
        if left != right:
            problems.append(f"chaining at {pos}->{pos + 1}: {head.predicate}{left} "
                            f"differs from {body.predicate}{right}")
    if a is not None:
        a = as_input_structure(p, a)
        for pos, atoms in enumerate(derivation_atoms(p, d)):
            for name, t in atoms:
                if name not in a.vocab or t not in a.relation(name):
                    problems.append(f"step {pos}: {name}{t} is not in the structure")
    return not problems, problems


def extract_structure(p: DatalogProgram, d: Derivation) -> Structure:
    """The structure made of exactly the EDB atoms the derivation instantiates."""
    ok, problems = validate_derivation(p, d)
    if not ok:
        raise InputError("invalid derivation: " + "; ".join(problems))
    facts = [f for atoms in derivation_atoms(p, d) for f in atoms]
    return Structure.from_facts(p.input_vocab, facts)


@dataclass(frozen=True)
class DerivationProperties:
    eq_classes: tuple[frozenset, ...]
    free: bool
    read_once: bool


def derivation_properties(p: DatalogProgram, d: Derivation) -> DerivationProperties:
    parent: dict[tuple[str, int], tuple[str, int]] = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for pos, step in enumerate(d.steps):
        for v in p.rules[step.rule].variables:
            parent[(v, pos)] = (v, pos)
    for pos in range(len(d.steps) - 1):
        head = p.rules[d.steps[pos].rule].head
        nxt = p.rules[d.steps[pos + 1].rule]
        if nxt.idb_body and nxt.idb_body[0].predicate == head.predicate:
            for x, y in zip(head.args, nxt.idb_body[0].args):
                ra, rb = find((x, pos)), find((y, pos + 1))
                if ra != rb:
                    parent[ra] = rb
    groups: dict = {}
    for node in parent:
        groups.setdefault(find(node), set()).add(node)
    classes = tuple(sorted((frozenset(g) for g in groups.values()),
                           key=lambda g: sorted((i, v) for v, i in g)))
    value_owner: dict[str, int] = {}
    free = True
    for ci, cls in enumerate(classes):
        for v, pos in cls:
            value = d.steps[pos].assignment[v]
            if value_owner.setdefault(value, ci) != ci:
                free = False
    atoms = [f for step in derivation_atoms(p, d, include_builtins=False) for f in step]
    return DerivationProperties(classes, free, len(atoms) == len(set(atoms)))


# evaluation

def as_input_structure(p: DatalogProgram, a) -> Structure:
    """Return a plain structure carrying the program's EDB and built-in relations."""
    full = a.full() if hasattr(a, "full") else a
    if not isinstance(full, Structure):
        raise InputError("expected a Structure or SuccessorStructure")
    for name, arity in p.input_vocab.symbols:
        if name not in full.vocab or full.vocab.arity(name) != arity:
            raise InputError(f"structure lacks {name}/{arity} required by the program")
    return full


class _Matcher:
    """Join of a fixed atom list against indexed relations."""

    def __init__(self, relations: Mapping[str, frozenset]):
        self.relations = relations
        self.indexes: dict = {}

    def lookup(self, name: str, bound: tuple[int, ...], key: tuple) -> Sequence[tuple]:
        idx = self.indexes.get((name, bound))
        if idx is None:
            idx = {}
            for t in self.relations[name]:
                idx.setdefault(tuple(t[i] for i in bound), []).append(t)
            self.indexes[(name, bound)] = idx
        return idx.get(key, ())

    def solutions(self, atoms: Sequence[Atom], assignment: dict) -> Iterator[dict]:
        if not atoms:
            yield assignment
            return
        atom, rest = atoms[0], atoms[1:]
        bound = tuple(i for i, v in enumerate(atom.args) if v in assignment)
        key = tuple(assignment[atom.args[i]] for i in bound)
        for t in self.lookup(atom.predicate, bound, key):
            extended = assignment
            ok = True
            for v, x in zip(atom.args, t):
                if v in extended:
                    if extended[v] != x:
                        ok = False
                        break
                else:
                    if extended is assignment:
                        extended = dict(assignment)
                    extended[v] = x
            if ok:
                yield from self.solutions(rest, extended)


def _join_plan(atoms: Sequence[Atom], bound: Iterable[str]) -> tuple:
    """Static join order: per atom, which positions are keys and which bind."""
    bound = set(bound)
    remaining = list(atoms)
    plan = []
    while remaining:
        # most already-bound arguments first, then the larger arity
        atom = max(remaining, key=lambda a: (sum(v in bound for v in a.args), len(a.args)))
        remaining.remove(atom)
        key_pos = tuple(i for i, v in enumerate(atom.args) if v in bound)
        key_vars = tuple(atom.args[i] for i in key_pos)
        fresh: list[tuple[int, str]] = []
        repeats: list[tuple[int, int]] = []
        first_at: dict[str, int] = {}
        for i, v in enumerate(atom.args):
            if v in bound:
                continue
            if v in first_at:
                repeats.append((first_at[v], i))
            else:
                first_at[v] = i
                fresh.append((i, v))
        plan.append((atom.predicate, key_pos, key_vars, tuple(fresh), tuple(repeats)))
        bound.update(atom.args)
    return tuple(plan)


def _run_plan(plan: tuple, matcher: "_Matcher", assignment: dict) -> list[dict]:
    results = [assignment]
    for name, key_pos, key_vars, fresh, repeats in plan:
        extended = []
        for asg in results:
            for t in matcher.lookup(name, key_pos, tuple(asg[v] for v in key_vars)):
                if repeats and any(t[i] != t[j] for i, j in repeats):
                    continue
                new = dict(asg)
                for i, v in fresh:
                    new[v] = t[i]
                extended.append(new)
        if not extended:
            return extended
        results = extended
    return results


def _complete(rule: Rule, assignment: dict, domain: Sequence[str]) -> Iterator[dict]:
    """Range any variable not bound by the body over the domain."""
    loose = [v for v in rule.variables if v not in assignment]
    if not loose:
        yield assignment
        return
    for values in itertools.product(domain, repeat=len(loose)):
        full = dict(assignment)
        full.update(zip(loose, values))
        yield full


@dataclass
class EvaluationResult:
    accepted: bool
    witness: Derivation | None
    facts: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.accepted, self.witness))


def evaluate(p: DatalogProgram, a, *, want_witness: bool = True) -> EvaluationResult:
    """Semi-naive fixpoint with one recorded predecessor per derived fact.

    Within one round, a fact's predecessor is the least (rule index,
    sorted assignment) among its derivations, so witnesses are reproducible.
    """
    full = as_input_structure(p, a)
    edb = {name: full.relation(name) for name in p.input_vocab.names}
    domain = full.domain
    idb_names = p.idb_vocab.names
    known: dict[str, set] = {n: set() for n in idb_names}
    provenance: dict[tuple, tuple] = {}
    matcher = _Matcher(edb)
    plans = p.join_plans

    bound_by_body = [set(r.variables) <= {v for x in r.body for v in x.args} for r in p.rules]

    def record(found: dict, rule_index: int, assignment: dict, body_facts: tuple) -> None:
        rule = p.rules[rule_index]
        full_assignments = ((assignment,) if bound_by_body[rule_index]
                            else _complete(rule, assignment, domain))
        for full_assignment in full_assignments:
            fact = rule.head.instantiate(full_assignment)
            if fact[1] in known[fact[0]]:
                continue
            previous = found.get(fact)
            if previous is not None:
                # keys are only compared on a tie, so build them lazily
                key = (rule_index, tuple(sorted(full_assignment.items())))
                if key >= (previous[0], tuple(sorted(previous[1].items()))):
                    continue
            found[fact] = (rule_index, dict(full_assignment), body_facts)

    def idb_solutions(atom: Atom, facts: Iterable[tuple], assignment: dict) -> Iterator[dict]:
        for t in facts:
            extended = dict(assignment)
            if all(extended.setdefault(v, x) == x for v, x in zip(atom.args, t)):
                yield extended

    found: dict = {}
    for i, rule in enumerate(p.rules):
        if not rule.idb_body:
            for sol in _run_plan(plans[i], matcher, {}):
                record(found, i, sol, ())
    delta: dict[str, set] = {n: set() for n in idb_names}
    while found:
        for fact, (rule_index, assignment, body_facts) in found.items():
            known[fact[0]].add(fact[1])
            delta[fact[0]].add(fact[1])
            provenance[fact] = (rule_index, assignment, body_facts)
        if () in known[p.goal]:
            break
        found = {}
        for i, rule in enumerate(p.rules):
            if not rule.idb_body:
                continue
            n = len(rule.idb_body)
            if n == 1:
                # linear rule: the single IDB atom ranges over the new facts
                atom = rule.idb_body[0]
                for t in delta[atom.predicate]:
                    for asg in idb_solutions(atom, (t,), {}):
                        for sol in _run_plan(plans[i], matcher, asg):
                            record(found, i, sol, ((atom.predicate, t),))
                continue
            for pivot in range(n):
                if not delta[rule.idb_body[pivot].predicate]:
                    continue
                partial = [{}]
                for k, atom in enumerate(rule.idb_body):
                    if k == pivot:
                        source = delta[atom.predicate]
                    elif k < pivot:
                        source = known[atom.predicate] - delta[atom.predicate]
                    else:
                        source = known[atom.predicate]
                    partial = [s for asg in partial for s in idb_solutions(atom, source, asg)]
                    if not partial:
                        break
                for asg in partial:
                    body_facts = tuple(x.instantiate(asg) for x in rule.idb_body)
                    for sol in _run_plan(plans[i], matcher, asg):
                        record(found, i, sol, body_facts)
        delta = {n: set() for n in idb_names}
    accepted = () in known[p.goal]
    witness = None
    if accepted and want_witness and p.is_linear():
        steps = []
        fact = (p.goal, ())
        while True:
            rule_index, assignment, body_facts = provenance[fact]
            steps.append(Step(rule_index, assignment))
            if not body_facts:
                break
            fact = body_facts[0]
        witness = Derivation(tuple(reversed(steps)))
    return EvaluationResult(accepted, witness, {n: frozenset(v) for n, v in known.items()})


def accepts(p: DatalogProgram, a) -> bool:
    return evaluate(p, a, want_witness=False).accepted


def possible_edb_atoms(p: DatalogProgram, a) -> int:
    full = as_input_structure(p, a)
    n = full.size
    return sum(n ** arity for name, arity in p.edb_vocab.symbols)


def find_read_once_derivation(p: DatalogProgram, a, max_depth: int | None = None,
                              max_states: int = 200_000) -> Derivation | None:
    """Breadth-first search for a shortest derivation that repeats no EDB atom.

    Built-in atoms are exempt. The depth bound defaults to twice the number
    of possible instantiated EDB atoms.
    """
    if not p.is_linear():
        raise InputError("read-once search needs a linear program")
    full = as_input_structure(p, a)
    if max_depth is None:
        max_depth = 2 * max(1, possible_edb_atoms(p, full))
    edb = {name: full.relation(name) for name in p.input_vocab.names}
    matcher = _Matcher(edb)
    domain = full.domain

    def moves(fact, used):
        for i, rule in enumerate(p.rules):
            if fact is None:
                if rule.idb_body:
                    continue
                starts = [{}]
            else:
                if not rule.idb_body or rule.idb_body[0].predicate != fact[0]:
                    continue
                asg: dict = {}
                if not all(asg.setdefault(v, x) == x for v, x in zip(rule.idb_body[0].args, fact[1])):
                    continue
                starts = [asg]
            for start in starts:
                for sol in matcher.solutions(rule.edb_body, start):
                    for full_asg in _complete(rule, sol, domain):
                        atoms = [x.instantiate(full_asg) for x in rule.edb_body
                                 if not p.is_builtin(x.predicate)]
                        if len(set(atoms)) != len(atoms) or used & set(atoms):
                            continue
                        yield i, full_asg, rule.head.instantiate(full_asg), used | frozenset(atoms)

    queue = deque([(None, frozenset(), ())])
    seen = {(None, frozenset())}
    while queue:
        fact, used, path = queue.popleft()
        if len(path) >= max_depth:
            continue
        for i, asg, head, new_used in sorted(moves(fact, used),
                                            key=lambda m: (m[0], tuple(sorted(m[1].items())))):
            steps = path + (Step(i, asg),)
            if head == (p.goal, ()):
                return Derivation(steps)
            state = (head, new_used)
            if state in seen:
                continue
            seen.add(state)
            if len(seen) > max_states:
                raise ResourceError(f"read-once search exceeded {max_states} states")
            queue.append((head, new_used, steps))
    return None
