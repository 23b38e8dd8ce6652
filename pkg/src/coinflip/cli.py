"""Command-line front end.

Exit codes: 0 success/feasible, 1 usage, parse or internal error, 2 infeasible.
The default arithmetic mode comes from ``--mode``, then ``CF_MODE``, then the
inputs themselves (any ``a/b`` value selects rational mode).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import treeio
from .analyzer import RESULT_FIELDS, analyze, brute_force_analyze
from .bounds import CLASSICAL, DEFINITIONAL, QUANTUM, classical_bound_rhs, feasible, symmetric_tradeoff
from .core import (
    FLOAT,
    MODES,
    RATIONAL,
    CoinFlipError,
    ConstraintViolation,
    InfeasibleSpec,
    ProbabilityError,
    ScriptMismatch,
    fmt,
    make_spec,
    tree_mode,
)
from .protocols import synthesize
from .simulator import AdversaryScript, estimate_honest, run_adversarial, sigma

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

FIG2_HEADER = ["a", "definitional", "quantum", "classical"]
FIG1_HEADER = ["p00", "classical_max_p11", "quantum_max_p11", "defined_max_p11"]

# analyses of trees above this size are skipped by `simulate`
REFERENCE_NODE_LIMIT = 5000


class UsageError(Exception):
    pass


def _resolve_mode(flag: str | None, texts=(), default: str | None = None) -> str:
    if flag:
        return flag
    env = os.environ.get("CF_MODE")
    if env:
        if env not in MODES:
            raise UsageError(f"CF_MODE must be one of {MODES}, got {env!r}")
        return env
    if default:
        return default
    return RATIONAL if any("/" in t for t in texts) else FLOAT


def _split(text: str, count: int, what: str) -> list[str]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != count or not all(parts):
        raise UsageError(f"{what} needs {count} comma-separated values, got {text!r}")
    return parts


def _parse_spec(args):
    parts = _split(args.spec, 6, "--spec")
    mode = _resolve_mode(args.mode, parts)
    try:
        return make_spec(*parts, mode=mode)
    except ProbabilityError as exc:
        # a malformed number is a usage error; an out-of-range one an invalid spec
        try:
            [float(Fraction(p)) for p in parts]
        except (ValueError, ZeroDivisionError):
            raise UsageError(str(exc)) from None
        raise ConstraintViolation(str(exc)) from None


def _emit(obj, as_json: bool, text: str):
    if as_json:
        print(json.dumps(obj, indent=2))
    else:
        print(text)


def _result_text(result) -> str:
    return "\n".join(f"{k:9s} {fmt(v)}" for k, v in zip(RESULT_FIELDS, result.as_tuple()))


def cmd_check(args) -> int:
    try:
        spec = _parse_spec(args)
    except ConstraintViolation as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return EXIT_ERROR
    verdict = feasible(spec, args.setting)
    lines = [f"{args.setting}: {'feasible' if verdict.feasible else 'infeasible'}"]
    lines += [f"  violated {v}" for v in verdict.violated]
    if verdict.needs_slack and verdict.feasible:
        lines.append("  achievable with arbitrarily small slack on the cheating parameters")
    _emit(verdict.to_json(), args.json, "\n".join(lines))
    return EXIT_OK if verdict.feasible else EXIT_INFEASIBLE


def cmd_synthesize(args) -> int:
    try:
        spec = _parse_spec(args)
    except ConstraintViolation as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        tree = synthesize(spec, args.setting)
    except InfeasibleSpec as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE
    treeio.save(tree, args.out)
    result = analyze(tree)
    _emit(result.to_json(), args.json, f"wrote {args.out}\n" + _result_text(result))
    return EXIT_OK


def _load_tree(path: str, mode_flag: str | None):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    mode = _resolve_mode(mode_flag, default=RATIONAL)
    return treeio.loads(text, mode)


def cmd_analyze(args) -> int:
    tree = _load_tree(args.tree, args.mode)
    result = analyze(tree)
    out = {"result": result.to_json()}
    lines = [_result_text(result)]
    if args.oracle:
        oracle = brute_force_analyze(tree, limit=args.limit)
        diffs = [name for name, a, b in zip(RESULT_FIELDS, result.as_tuple(), oracle.as_tuple())
                 if a != b]
        if tree_mode(tree) == FLOAT:
            diffs = [n for n in diffs if abs(getattr(result, n) - getattr(oracle, n)) > 1e-12]
        status = "exact match" if not diffs else "MISMATCH in " + ", ".join(diffs)
        out["oracle"] = {"status": status, "result": oracle.to_json()}
        lines.append(f"oracle: {status}")
        if diffs:
            _emit(out, args.json, "\n".join(lines))
            return EXIT_ERROR
    _emit(out, args.json, "\n".join(lines))
    return EXIT_OK


def _grid(step_text: str, upper: Fraction = Fraction(1)) -> list[Fraction]:
    try:
        step = Fraction(step_text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad step {step_text!r}") from None
    if not 0 < step <= Fraction(1, 2):
        raise UsageError("step must lie in (0, 0.5]")
    n = int(upper / step)
    return [i * step for i in range(n + 1)]


def fig2_rows(step_text: str) -> list[list[float]]:
    rows = []
    for a in _grid(step_text):
        rows.append([float(a)] + [symmetric_tradeoff(a, s) for s in (DEFINITIONAL, QUANTUM, CLASSICAL)])
    return rows


def fig1_rows(step_text: str, params=None) -> list[list]:
    """Rows (p00, classical max p11, quantum max p11, definitional max p11).

    Cheating caps default to 3/4 each. Entries are blank where no coin flip
    with that p00 exists in the setting.
    """
    p0s, p1s, ps0, ps1 = params or (Fraction(3, 4),) * 4
    rhs = classical_bound_rhs(p0s, p1s, ps0, ps1)
    cap0, cap1 = p0s * ps0, p1s * ps1
    rows = []
    for p00 in _grid(step_text, min(p0s, ps0)):
        defined = min(p1s, ps1, 1 - p00)
        classical = min(cap1, rhs - p00) if p00 <= cap0 else None
        quantum = min(cap1, 1 - p00) if p00 <= cap0 else None
        rows.append([float(p00)] + [None if v is None else float(v)
                                    for v in (classical, quantum, defined)])
    return rows


def cmd_sweep(args) -> int:
    if args.figure == 2:
        header, rows = FIG2_HEADER, fig2_rows(args.step)
    else:
        params = None
        if args.params:
            try:
                params = [Fraction(p) for p in _split(args.params, 4, "--params")]
            except (ValueError, ZeroDivisionError):
                raise UsageError(f"bad --params {args.params!r}") from None
            if not all(0 <= p <= 1 for p in params):
                raise UsageError("--params values must lie in [0, 1]")
        header, rows = FIG1_HEADER, fig1_rows(args.step, params)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else repr(v) for v in row])
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    tree = _load_tree(args.tree, args.mode)
    if args.script:
        try:
            doc = json.loads(Path(args.script).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read script {args.script}: {exc}") from None
        script = AdversaryScript.from_json(doc, tree)
        dist = run_adversarial(tree, script, args.trials, args.seed)
    else:
        script = None
        dist = estimate_honest(tree, args.trials, args.seed)
    out = {"distribution": dist.to_json()}
    if sum(1 for _ in tree.nodes()) <= REFERENCE_NODE_LIMIT:
        result = analyze(tree)
        if script is None:
            ref = {"zero": float(result.p00), "one": float(result.p11), "abort": float(result.abort)}
        else:
            side = script.party
            ref = {"zero_max": float(result.force(side, 0)), "one_max": float(result.force(side, 1))}
        out["reference"] = {k: {"value": v, "sigma": sigma(min(max(v, 0.0), 1.0), args.trials)}
                            for k, v in ref.items()}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coinflip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def spec_args(p):
        p.add_argument("--spec", required=True,
                       help="p00,p11,p0s,p1s,ps0,ps1 as decimals or a/b fractions")
        p.add_argument("--setting", choices=(CLASSICAL, QUANTUM), default=CLASSICAL)
        p.add_argument("--mode", choices=MODES)
        p.add_argument("--json", action="store_true", help="print JSON instead of text")

    p = sub.add_parser("check", help="feasibility verdict for a coin-flip spec")
    spec_args(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synthesize", help="write a protocol tree implementing a spec")
    spec_args(p)
    p.add_argument("--out", required=True, help="output cf-tree/1 JSON file")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("analyze", help="exact honest and cheating probabilities of a tree")
    p.add_argument("tree")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--oracle", action="store_true", help="cross-check by strategy enumeration")
    p.add_argument("--limit", type=int, default=100_000, help="strategy limit for --oracle")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="CSV trade-off curves")
    p.add_argument("--figure", type=int, choices=(1, 2), required=True)
    p.add_argument("--step", default="0.01")
    p.add_argument("--params", help="p0s,p1s,ps0,ps1 for figure 1 (default 3/4 each)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte-Carlo runs of a tree")
    p.add_argument("tree")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--script", help="adversary script JSON")
    p.add_argument("--mode", choices=MODES)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ScriptMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except CoinFlipError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
