"""Command-line interface: ``ctqa run|sweep|build|check|zoo``.

Exit codes: ``run`` returns 0/1/2 for accept/reject/unknown, ``check``
returns 0 iff the machine is clean and 1 otherwise. Usage errors exit 64,
any other failure exits 3.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import List, Optional

from . import linalg as la
from .constructions import (
    ZOO,
    ConstructionError,
    NamedConstruction,
    scale_construction,
    time_independent_to_mcqfa,
    union_rotating,
    union_shared_scheduler,
    zoo_build,
)
from .fileformat import ParseError, parse_machine_file, serialize_machine
from .machine import Ctqa, KCtqa, MachineError, Mcqfa, validate
from .recognition import (
    FamilyError,
    PolicyError,
    Verdict,
    VerdictPolicy,
    classify,
    default_policy,
    evaluate,
    rows_to_csv,
    sweep,
)
from .scheduler import ScheduleError, format_rational

EXIT_USAGE = 64
EXIT_ERROR = 3
VERDICT_EXIT = {Verdict.ACCEPT: 0, Verdict.REJECT: 1, Verdict.UNKNOWN: 2}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(path: str, validate_machine: bool = True) -> NamedConstruction:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_machine_file(text, validate_machine)
    except ParseError as e:
        raise ParseError(f"{path}: {e}") from None


def _write(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _policy(c: NamedConstruction, text: Optional[str]) -> VerdictPolicy:
    if text is None:
        return default_policy(c)
    try:
        return VerdictPolicy.parse(text)
    except PolicyError as e:
        raise UsageError(str(e)) from None


def cmd_run(args) -> int:
    c = _load(args.machine)
    policy = _policy(c, args.policy)
    bit, ts, out = evaluate(c, args.input)
    verdict = classify(out, policy)
    print(f"p_accept {out.p_accept:.9f}")
    print(f"p_reject {out.p_reject:.9f}")
    print(f"p_neutral {out.p_neutral:.9f}")
    print(f"decider_bit {'-' if bit is None else bit}")
    print(f"schedule {';'.join(format_rational(t) for t in ts)}")
    print(f"verdict {verdict}")
    return VERDICT_EXIT[verdict]


def cmd_sweep(args) -> int:
    c = _load(args.machine)
    policy = _policy(c, args.policy)
    try:
        rows = sweep(c, args.family, policy, seed=args.seed, max_words=args.max_words)
    except FamilyError as e:
        raise UsageError(f"--family: {e}") from None
    _write(rows_to_csv(rows), args.csv)
    return 0


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"expected a rational number, got {text!r}") from None


def cmd_build(args) -> int:
    kind = args.kind
    operands = args.operands
    expected = {"union-rot": 2, "union-shared": 2, "scale": 2, "to-mcqfa": 2}[kind]
    if len(operands) != expected:
        raise UsageError(f"build {kind} takes {expected} operands, got {len(operands)}")
    if kind == "union-rot":
        a, b = _load(operands[0]), _load(operands[1])
        witnesses = None
        if args.witnesses is not None:
            witnesses = [w.strip() for w in args.witnesses.split(",")]
        result = union_rotating(a, b, witnesses, args.witness_length)
    elif kind == "union-shared":
        result = union_shared_scheduler(_load(operands[0]), _load(operands[1]))
    elif kind == "scale":
        result = scale_construction(_load(operands[0]), _fraction(operands[1]))
    else:
        c = _load(operands[0])
        if not isinstance(c.machine, Ctqa):
            raise ConstructionError("to-mcqfa needs a single-pass time-controlled machine")
        mcqfa = time_independent_to_mcqfa(c.machine, _fraction(operands[1]))
        result = NamedConstruction(f"{c.name}-mcqfa", mcqfa, None, None, c.cutpoint)
    _write(serialize_machine(result), args.output)
    return 0


def _diagnostics(c: NamedConstruction) -> List[str]:
    m = c.machine
    base = m.base if isinstance(m, KCtqa) else m
    lines = []
    if isinstance(base, Mcqfa):
        for s, u in base.unitaries.items():
            lines.append(f"unitary {s}: unitarity defect {la.unitary_defect(u):.3e}")
    else:
        for s, h in base.hamiltonians.items():
            u = la.mat_exp_hermitian(h, 1) if la.is_hermitian(h) else None
            tail = "" if u is None else f", exp(-iH) unitarity defect {la.unitary_defect(u):.3e}"
            lines.append(f"ham {s}: hermitian defect {la.hermitian_defect(h):.3e}{tail}")
    return lines


def cmd_check(args) -> int:
    c = _load(args.machine, validate_machine=False)
    for line in _diagnostics(c):
        print(line)
    problems = validate(c.machine)
    for p in problems:
        print(f"violation: {p}")
    print("clean" if not problems else f"{len(problems)} violation(s)")
    return 0 if not problems else 1


def cmd_zoo(args) -> int:
    if args.action == "list":
        width = max(len(n) for n in ZOO)
        for name, entry in ZOO.items():
            print(f"{name:<{width}}  {entry.description}")
        return 0
    if args.name is None:
        raise UsageError("zoo emit needs a construction name")
    if args.name not in ZOO:
        raise UsageError(f"unknown construction {args.name!r}; known: {', '.join(ZOO)}")
    _write(serialize_machine(zoo_build(args.name)), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ctqa", description="Simulate classically time-controlled quantum automata.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one word")
    run.add_argument("-m", "--machine", required=True)
    run.add_argument("-i", "--input", required=True, help="input word (use '' for the empty word)")
    run.add_argument("--policy", help="cutpoint:p/q | isolated:p/q,p/q | bounded:p/q")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="run a family of words and emit CSV")
    sw.add_argument("-m", "--machine", required=True)
    sw.add_argument("--family", required=True)
    sw.add_argument("--csv", default="-", help="output path (default stdout)")
    sw.add_argument("--policy")
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--max-words", type=int, default=10**6)
    sw.set_defaults(func=cmd_sweep)

    b = sub.add_parser("build", help="apply a construction and serialize the result")
    b.add_argument("kind", choices=["union-rot", "union-shared", "scale", "to-mcqfa"])
    b.add_argument("operands", nargs="+", help="machine files, then a factor or duration")
    b.add_argument("-o", "--output", default="-")
    b.add_argument("--witness-length", type=int, default=8,
                   help="union-rot: compare deciders on all words up to this length")
    b.add_argument("--witnesses", help="union-rot: comma-separated words to compare deciders on")
    b.set_defaults(func=cmd_build)

    ch = sub.add_parser("check", help="validate a machine file")
    ch.add_argument("-m", "--machine", required=True)
    ch.set_defaults(func=cmd_check)

    z = sub.add_parser("zoo", help="list or emit named constructions")
    z.add_argument("action", choices=["list", "emit"], nargs="?", default="list")
    z.add_argument("name", nargs="?")
    z.add_argument("-o", "--output", default="-")
    z.set_defaults(func=cmd_zoo)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"ctqa: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"ctqa: cannot access {e.filename}: {e.strerror}", file=sys.stderr)
        return EXIT_ERROR
    except (ParseError, ConstructionError, MachineError, ScheduleError, la.LinalgError) as e:
        print(f"ctqa: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
