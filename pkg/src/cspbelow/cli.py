"""The ``cspb`` command line.

Every subcommand ends in one of three statuses: ok (exit 0), reject
(exit 1, a valid run with a negative answer) or error (exit 2). With
``--json`` the result is printed as a versioned envelope.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import canonical, pathclassify, pathscape, succro
from .datalog import (evaluate, derivation_atoms, derivation_properties, parse_program,
                      Derivation, validate_derivation)
from .errors import CspbError
from .structures import (find_homomorphism, format_structure, homomorphism_violations,
                         maps_to, parse_structure)

FORMAT_VERSION = 1
OK, REJECT, ERROR = "ok", "reject", "error"
EXIT_CODES = {OK: 0, REJECT: 1, ERROR: 2}


@dataclass
class CommandResult:
    status: str
    payload: dict = field(default_factory=dict)
    text: str | None = None
    command: str = ""

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _structure(path: str):
    return parse_structure(_read(path))


def _program(path: str):
    return parse_program(_read(path))


def _input_for(p, a):
    """Successor programs read their input on 1..n with the built-ins attached."""
    return succro.SuccessorStructure(a) if p.builtins_used else a


# subcommands

def cmd_hom(args) -> CommandResult:
    a, b = _structure(args.source), _structure(args.target)
    h = find_homomorphism(a, b, max_nodes=args.max_nodes)
    if h is None:
        return CommandResult(REJECT, {"homomorphism": None}, "no homomorphism")
    return CommandResult(OK, {"homomorphism": dict(h.mapping)},
                         "\n".join(f"{x} -> {y}" for x, y in sorted(h.mapping.items())))


def cmd_eval(args) -> CommandResult:
    p = _program(args.program)
    a = _input_for(p, _structure(args.structure))
    result = evaluate(p, a)
    payload: dict = {"accepted": result.accepted}
    if result.witness is not None:
        ok, problems = validate_derivation(p, result.witness, a)
        props = derivation_properties(p, result.witness)
        payload.update(valid=ok, problems=problems, read_once=props.read_once, free=props.free)
        if args.trace:
            payload["derivation"] = result.witness.to_json()
            payload["atoms"] = [[[n, list(t)] for n, t in step]
                                for step in derivation_atoms(p, result.witness)]
    text = "accepted" if result.accepted else "rejected"
    if args.trace and result.witness is not None:
        lines = [text]
        for pos, step in enumerate(result.witness.steps):
            asg = ", ".join(f"{k}={v}" for k, v in sorted(step.assignment.items()))
            lines.append(f"{pos + 1}. {p.rules[step.rule]}  [{asg}]")
        text = "\n".join(lines)
    return CommandResult(OK if result.accepted else REJECT, payload, text)


def cmd_canon(args) -> CommandResult:
    b = _structure(args.template)
    if args.input is None:
        prog = canonical.build_canonical(b, args.j, args.k, args.mode, max_atoms=args.max_atoms)
        text = str(prog.base)
        return CommandResult(OK, {"program": text, "sidecar": prog.sidecar(),
                                  "rules": len(prog.base.rules)}, text)
    a = _structure(args.input)
    res = canonical.canonical_accept(b, args.j, args.k, args.mode, a, max_atoms=args.max_atoms)
    payload: dict = {"accepted": res.accepted, "states_explored": res.states_explored}
    if res.accepted:
        ok, problems = validate_derivation(res.program, res.witness, a)
        payload.update(program=str(res.program), derivation=res.witness.to_json(),
                       valid=ok, problems=problems)
    text = ("accepted: the input does not map to the template" if res.accepted
            else "not accepted by the canonical program")
    return CommandResult(OK if res.accepted else REJECT, payload, text)


def cmd_zigzag(args) -> CommandResult:
    whole, rep = pathscape.parse_representation(_read(args.representation), (args.j, args.k))
    ok, problems = pathscape.validate_representation(rep, whole)
    if not ok:
        return CommandResult(ERROR, {"problems": problems}, "invalid representation: " + "; ".join(problems))
    z = pathscape.zigzag(rep, args.word)
    out = z.representation()
    valid, out_problems = pathscape.validate_representation(out)
    proj = pathscape.projection_hom(z, rep)
    payload = z.to_json()
    payload.update(valid=valid, problems=out_problems, projection=dict(proj.mapping),
                   projection_valid=proj.is_valid())
    text = format_structure(z.union()) + pathscape.format_bags(out) + "\n"
    return CommandResult(OK, payload, text)


def cmd_pathdec(args) -> CommandResult:
    s = _structure(args.structure)
    rep = pathscape.decide_pathwidth(s, args.j, args.k, max_size=args.max_len or 8,
                                     max_states=args.max_nodes)
    if rep is None:
        return CommandResult(REJECT, {"decomposition": None}, f"no ({args.j},{args.k})-path decomposition")
    ok, problems = pathscape.validate_representation(rep, s)
    return CommandResult(OK, {"decomposition": [list(b.domain) for b in rep.bags],
                              "params": list(rep.params), "valid": ok, "problems": problems},
                         pathscape.format_bags(rep))


def cmd_classify_path(args) -> CommandResult:
    p = pathscape.OrientedPath(args.word)
    shape = pathclassify.classify_path_shape(p)
    payload = shape.to_json()
    payload.update(word=p.word, minimal=p.minimal, height=p.height, levels=list(p.levels))
    text = f"{p.word}: {shape.kind} {shape.params or ''}".rstrip() + \
        f" (height {p.height}, {'minimal' if p.minimal else 'not minimal'})"
    return CommandResult(OK, payload, text)


def cmd_nl_witness(args) -> CommandResult:
    w = pathclassify.nl_witness_search(args.word, max_q_len=args.max_len or 8)
    if w is None:
        return CommandResult(REJECT, {"witness": None}, "no witness found")
    b = pathscape.OrientedPath(args.word)
    parts = w.parts(b)
    payload = {"split": list(w.split), "parts": list(parts), "q": w.q.word, "height": w.height,
               "certificates": w.certificates, "verified": pathclassify.check_witness(b, w)}
    return CommandResult(OK, payload, f"P1={parts[0]} P2={parts[1]} P3={parts[2]} q={w.q.word}")


def cmd_gadget(args) -> CommandResult:
    w = pathclassify.nl_witness_search(args.word, max_q_len=args.max_len or 8)
    if w is None:
        return CommandResult(REJECT, {"gadget": None}, "no witness, so no gadget")
    g = pathclassify.build_leq_gadget(args.word, w)
    text = format_structure(g.structure)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    payload = {"structure": text, "x": g.x, "y": g.y, "labels": g.labels,
               "projection": sorted(list(t) for t in g.projection), "verified": g.verified}
    return CommandResult(OK if g.verified else REJECT, payload,
                         text + f"# x = {g.x}, y = {g.y}, projection {sorted(g.projection)}\n")


def cmd_obstructions(args) -> CommandResult:
    obs = pathclassify.wave_obstructions(args.word, max_len=args.max_len or 10)
    payload = {"wave": obs.wave.word, "r": obs.r, "ell": obs.ell, "taller_than": obs.taller_than,
               "obstructions": [{"path": o.path.word, "form": o.form} for o in obs.emitted]}
    lines = [f"form {o.form}: {o.path.word}" for o in obs.emitted]
    lines.append(f"plus every path of height > {obs.taller_than}")
    return CommandResult(OK, payload, "\n".join(lines))


def _hom_check(a, b) -> bool:
    return find_homomorphism(a, b) is not None


def cmd_split(args) -> CommandResult:
    a = _structure(args.structure)
    occ = succro.occurrences(a, args.element)
    listing = [[r, list(t), i] for r, t, i in occ]
    if args.at is None and not args.random:
        return CommandResult(OK, {"occurrences": listing},
                             "\n".join(f"{n}: {r}{t} position {i}" for n, (r, t, i) in enumerate(occ)))
    if args.random:
        rng = random.Random(args.seed)
        size = rng.randrange(1, len(occ)) if len(occ) > 1 else 1
        picked = sorted(rng.sample(range(len(occ)), size))
    else:
        picked = [int(x) for x in args.at.split(",") if x.strip()]
    if any(not 0 <= i < len(occ) for i in picked):
        return CommandResult(ERROR, {"occurrences": listing}, "occurrence index out of range")
    result = succro.split(a, args.element, [occ[i] for i in picked])
    maps_back = _hom_check(result, a)
    text = format_structure(result)
    return CommandResult(OK, {"structure": text, "chosen": picked, "fresh": succro.fresh_name(a, args.element),
                              "maps_back": maps_back}, text)


def cmd_minimize(args) -> CommandResult:
    a = _structure(args.structure)
    if args.template:
        b = _structure(args.template)
        member = lambda s: not maps_to(s, b)
        cls = f"structures not mapping to {args.template}"
    else:
        p = _program(args.program)
        if p.builtins_used:
            return CommandResult(ERROR, {}, "minimization is over plain structures; "
                                           "the program uses successor built-ins")
        member = lambda s: evaluate(p, s, want_witness=False).accepted
        cls = f"structures accepted by {args.program}"
    if not member(a):
        return CommandResult(REJECT, {"class": cls}, "the input is not in the class")
    m = succro.minimize_in_class(a, member)
    leftovers = succro.local_minimality_report(m, member)
    text = format_structure(m)
    return CommandResult(OK, {"class": cls, "structure": text, "maps_back": _hom_check(m, a),
                              "locally_minimal": not leftovers, "escapes": leftovers}, text)


def cmd_compile_mnbp(args) -> CommandResult:
    p = _program(args.program)
    h = succro.compile_to_mnbp(p, args.n)
    doc = h.to_json()
    if args.out:
        Path(args.out).write_text(json.dumps(doc), encoding="utf-8")
    return CommandResult(OK, {"mnbp": doc, "size": h.size, "diagnostics": h.diagnostics},
                         f"{h.size} nodes, {len(h.arcs)} arcs; " +
                         ", ".join(f"{k}={v}" for k, v in h.diagnostics.items()))


def cmd_eval_mnbp(args) -> CommandResult:
    h = succro.MnBP.loads(_read(args.mnbp))
    a = _structure(args.structure)
    res = succro.evaluate_mnbp(h, a)
    payload = {"accepted": res.accepted, "read_once": res.read_once,
               "path": None if res.path is None else [arc.to_json() for arc in res.path]}
    if not res.accepted:
        return CommandResult(REJECT, payload, "no accepting path")
    lines = [f"{arc.source} -> {arc.target}" + (f"  [{arc.label[0]}({','.join(arc.label[1])})]"
                                                 if arc.label else "") for arc in res.path]
    return CommandResult(OK, payload, "\n".join(lines + [f"read-once: {res.read_once}"]))


def cmd_surgery(args) -> CommandResult:
    p = _program(args.program)
    m = _structure(args.structure)
    trace = succro.surgery_experiment(p, m, args.n)
    if trace is None:
        return CommandResult(REJECT, {"trace": None}, "no splice found within the budget")
    doc = trace.to_json()
    text = (f"cut at bag {trace.cut['g']} on {trace.cut['idb']}{tuple(trace.cut['tuple'])}; "
            f"valid={trace.valid} accepted={trace.accepted} split_variant={trace.split_variant}\n"
            + format_structure(trace.extracted))
    return CommandResult(OK if trace.valid and trace.accepted else REJECT, {"trace": doc}, text)


def cmd_validate(args) -> CommandResult:
    """Re-check a JSON witness produced by another subcommand."""
    doc = json.loads(_read(args.witness))
    if isinstance(doc, dict) and "format" in doc and "payload" in doc:
        doc = doc["payload"]
    for key in ("derivation", "homomorphism", "decomposition"):
        if isinstance(doc, dict) and key in doc and doc[key] is None:
            return CommandResult(ERROR, {"valid": False}, f"the witness file holds no {key}")
    if args.kind == "derivation":
        p = _program(args.files[0])
        a = _input_for(p, _structure(args.files[1]))
        steps = doc.get("derivation", doc) if isinstance(doc, dict) else doc
        ok, problems = validate_derivation(p, Derivation.from_json(steps), a)
    elif args.kind == "hom":
        a, b = _structure(args.files[0]), _structure(args.files[1])
        mapping = doc.get("homomorphism", doc)
        problems = homomorphism_violations(mapping, a, b)
        ok = not problems
    else:
        s = _structure(args.files[0])
        sets = doc.get("decomposition", doc)
        rep = pathscape.PathRepresentation.from_element_sets(s, sets, (args.j, args.k))
        ok, problems = pathscape.validate_representation(rep, s)
    return CommandResult(OK if ok else REJECT, {"valid": ok, "problems": problems},
                         "valid" if ok else "invalid: " + "; ".join(problems))


# argument parsing

def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="print a versioned JSON envelope")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized choices")
    common.add_argument("--max-nodes", type=int, default=argparse.SUPPRESS, help="search budget")
    common.add_argument("--max-len", type=int, default=argparse.SUPPRESS, help="length or size budget")
    common.add_argument("--trace", action="store_true", default=argparse.SUPPRESS,
                        help="include derivations and step details")
    return common


DEFAULTS = {"json": False, "seed": 0, "max_nodes": 1_000_000, "max_len": None, "trace": False}


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="cspb", parents=[common],
                                     description="Constraint satisfaction workbench.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(handler=fn)
        return sp

    sp = add("hom", cmd_hom, "find a homomorphism between two structures")
    sp.add_argument("source")
    sp.add_argument("target")

    sp = add("eval", cmd_eval, "evaluate a Datalog program on a structure")
    sp.add_argument("program")
    sp.add_argument("structure")

    sp = add("canon", cmd_canon, "build or run the canonical program of a template")
    sp.add_argument("template")
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--mode", choices=[canonical.LINEAR_MODE, canonical.SYMMETRIC_MODE],
                    default=canonical.LINEAR_MODE)
    sp.add_argument("--input", help="decide acceptance of this structure instead of printing rules")
    sp.add_argument("--max-atoms", type=int, default=None)

    sp = add("zigzag", cmd_zigzag, "apply the zigzag operator to a path representation")
    sp.add_argument("representation")
    sp.add_argument("word")
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--k", type=int, default=2)

    sp = add("pathdec", cmd_pathdec, "search for a (j,k)-path decomposition")
    sp.add_argument("structure")
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--k", type=int, default=2)

    sp = add("classify-path", cmd_classify_path, "classify an oriented path word")
    sp.add_argument("word")

    sp = add("nl-witness", cmd_nl_witness, "look for an NL-hardness witness in a core path")
    sp.add_argument("word")

    sp = add("gadget", cmd_gadget, "build and verify the <=-gadget for a core path")
    sp.add_argument("word")
    sp.add_argument("--out", help="also write the gadget structure here")

    sp = add("obstructions", cmd_obstructions, "list obstructions for a wave")
    sp.add_argument("word")

    sp = add("split", cmd_split, "list occurrences of an element or split it")
    sp.add_argument("structure")
    sp.add_argument("element")
    sp.add_argument("--at", help="comma-separated occurrence indices to move to the fresh element")
    sp.add_argument("--random", action="store_true", help="pick a random strict subset (uses --seed)")

    sp = add("minimize", cmd_minimize, "shrink a structure to a critical, split-minimal one")
    sp.add_argument("structure")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--template", help="class of structures not mapping to this template")
    group.add_argument("--program", help="class of structures accepted by this program")

    sp = add("compile-mnbp", cmd_compile_mnbp, "compile a linear program into a branching program")
    sp.add_argument("program")
    sp.add_argument("n", type=int)
    sp.add_argument("--out", help="write the branching program JSON here")

    sp = add("eval-mnbp", cmd_eval_mnbp, "run a branching program on a structure over 1..n")
    sp.add_argument("mnbp")
    sp.add_argument("structure")

    sp = add("surgery", cmd_surgery, "cut and splice read-once derivations of embedded copies")
    sp.add_argument("program")
    sp.add_argument("structure")
    sp.add_argument("n", type=int)

    sp = add("validate", cmd_validate, "re-check a JSON witness")
    sp.add_argument("kind", choices=["derivation", "hom", "representation"])
    sp.add_argument("witness")
    sp.add_argument("files", nargs="+", help="program and structure, two structures, or one structure")
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--k", type=int, default=2)
    return parser


def dispatch(argv: list[str]) -> CommandResult:
    """Run one subcommand; usage mistakes raise SystemExit(2) from argparse."""
    args = build_parser().parse_args(argv)
    for key, value in DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    random.seed(args.seed)
    try:
        result = args.handler(args)
    except (CspbError, OSError, json.JSONDecodeError, KeyError) as exc:
        result = CommandResult(ERROR, {"message": str(exc)}, f"error: {exc}")
    result.payload.setdefault("seed", args.seed)
    result.command = args.command
    return result


def envelope(result: CommandResult) -> dict:
    return {"format": FORMAT_VERSION, "command": result.command, "status": result.status,
            "exit_code": result.exit_code, "payload": result.payload}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        result = dispatch(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if "--json" in argv:
        print(json.dumps(envelope(result), indent=2, sort_keys=True))
    else:
        stream = sys.stderr if result.status == ERROR else sys.stdout
        print(result.text if result.text is not None else json.dumps(result.payload, indent=2),
              file=stream)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
