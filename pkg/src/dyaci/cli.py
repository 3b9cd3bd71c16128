"""Command line entry point: normalize, derive, solve, attack, selftest."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .constraints import parse_system
from .deduction import DeductionError, Theory, derivable
from .dy import NotStandardError, solve_dy
from .protocol import ProtocolError, Verdict, find_attack, parse_protocol
from .solver import Budget, SolveResult, Status, solve
from .syntax import ParseError, parse_constraint_line, parse_terms
from .terms import TermError, dag_size, edge_count, normalize, render

log = logging.getLogger("dyaci")

EXIT_OK = 0
EXIT_NO = 1
EXIT_ERROR = 2
EXIT_INDETERMINATE = 3


class UsageError(Exception):
    pass


def _positive(kind):
    def check(text: str):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return check


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyaci", description="Dolev-Yao deduction with ACI sets")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, theory=False, budget=False):
        p.add_argument("--format", choices=("text", "json"), default="text")
        if theory:
            p.add_argument("--theory", choices=[t.value for t in Theory], default=Theory.DYACI.value)
        if budget:
            p.add_argument("--max-nodes", type=_positive(int), default=Budget().max_nodes)
            p.add_argument("--max-seconds", type=_positive(float), default=None)

    p = sub.add_parser("normalize", help="print the ACI normal form of each term")
    p.add_argument("file", help="terms, comma or line separated ('-' for stdin)")
    common(p)

    p = sub.add_parser("derive", help="decide ground derivability 'E |> t', one per line")
    p.add_argument("file")
    p.add_argument("--strict", action="store_true", help="reject terms that are not normalized")
    common(p, theory=True)

    p = sub.add_parser("solve", help="decide a constraint system")
    p.add_argument("file")
    common(p, theory=True, budget=True)

    p = sub.add_parser("attack", help="search a protocol description for an attack")
    p.add_argument("file")
    common(p, budget=True)

    p = sub.add_parser("selftest", help="run the seeded property checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=_positive(int), default=1000, help="random terms per check")
    p.add_argument("--solver-cases", type=_positive(int), default=20)
    common(p)
    return parser


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _lines(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _emit(args, record: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(record, sort_keys=True))
    else:
        print(text)


def _budget(args) -> Budget:
    return Budget(max_nodes=args.max_nodes, max_seconds=args.max_seconds)


def _stats(result: SolveResult) -> dict:
    s = result.stats
    return {"nodes": s.nodes, "pruned": s.pruned, "bound": s.bound, "dag_size": s.dag_size, "seconds": round(s.seconds, 4)}


def cmd_normalize(args) -> int:
    terms = [t for line in _lines(_read(args.file)) for t in parse_terms(line)]
    for t in terms:
        n = normalize(t)
        record = {"status": "ok", "term": render(n), "dag_size": dag_size(n), "edge_count": edge_count(n)}
        _emit(args, record, f"{render(n)}    dag_size={dag_size(n)} edges={edge_count(n)}")
    return EXIT_OK


def cmd_derive(args) -> int:
    theory = Theory(args.theory)
    code = EXIT_OK
    for line in _lines(_read(args.file)):
        knowledge, target = parse_constraint_line(line)
        if not args.strict:
            knowledge, target = [normalize(e) for e in knowledge], normalize(target)
        yes = derivable(knowledge, target, theory, strict=args.strict)
        if not yes:
            code = EXIT_NO
        _emit(args, {"status": "YES" if yes else "NO", "constraint": line}, f"{'YES' if yes else 'NO'}  {line}")
    return code


def cmd_solve(args) -> int:
    system = parse_system(_read(args.file))
    theory = Theory(args.theory)
    result = solve_dy(system, _budget(args)) if theory is Theory.DY else solve(system, _budget(args))
    bindings = {x: render(v) for x, v in sorted((result.model or {}).items())}
    lines = [result.status.value] + [f"  {x} = {v}" for x, v in bindings.items()]
    _emit(args, {"status": result.status.value, "bindings": bindings, "stats": _stats(result)}, "\n".join(lines))
    return {Status.SAT: EXIT_OK, Status.UNSAT: EXIT_NO, Status.INDETERMINATE: EXIT_INDETERMINATE}[result.status]


def cmd_attack(args) -> int:
    problem = parse_protocol(_read(args.file))
    outcome = find_attack(problem, _budget(args))
    report = outcome.report
    record = {"status": outcome.verdict.value, "bindings": {}, "stats": {"systems_solved": outcome.checked}}
    if report is not None:
        record["secret"] = render(report.secret)
        record["bindings"] = {x: render(v) for x, v in sorted(report.model.items())}
        record["trace"] = [t.render() for t in report.trace]
        record["stats"].update(_stats(report.solve))
        text = "ATTACK\n" + report.render()
    else:
        text = outcome.verdict.value
    _emit(args, record, text)
    return {Verdict.ATTACK: EXIT_OK, Verdict.SAFE: EXIT_NO, Verdict.INDETERMINATE: EXIT_INDETERMINATE}[outcome.verdict]


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest(args.seed, args.size, args.solver_cases)
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        record = {"status": status, "check": r.name, "cases": r.cases, "failures": len(r.failures)}
        _emit(args, record, f"{status}  {r.name}  ({r.cases} cases, {r.seconds:.2f}s)")
    return EXIT_OK if all(r.ok for r in results) else EXIT_NO


COMMANDS = {
    "normalize": cmd_normalize,
    "derive": cmd_derive,
    "solve": cmd_solve,
    "attack": cmd_attack,
    "selftest": cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParseError, ProtocolError, NotStandardError, DeductionError, TermError) as exc:
        print(f"dyaci {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
