"""Command-line front end: solve, verify, transform, suite.

Problem files are plain text:

    # optional comments
    variables: x1 x2
    minimize: x1*x2
    (x1^2 - 1)^2 + (x2^2 - 1)^2 == 0
    x1 + x2 - 1 >= 0
    options:
    order-min: 3
    order-max: 4
    kind: qmodule
    side: moment

Exit codes: 0 success/valid, 1 invalid certificate, 2 parse error,
3 solver-fatal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from . import relax
from .certify import (Certificate, Problem, QMODULE, PREORDERING,
                      gradient_problem, square_equalities, verify_certificate)
from .gallery import all_fixtures
from .poly import ParseError, format_polynomial, parse_polynomial

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_SOLVER = 3

REPORT_VERSION = 1

_OPTION_KEYS = ("order-min", "order-max", "kind", "side", "tol-gap", "tol-feas")


@dataclass
class ProblemFile:
    """Parsed problem file: a Problem plus the optional options block."""

    problem: Problem
    options: dict = field(default_factory=dict)


def parse_problem_file(text: str) -> ProblemFile:
    variables: Optional[list] = None
    objective = None
    equalities = []
    inequalities = []
    options: dict = {}
    in_options = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "options:":
            in_options = True
            continue
        if in_options:
            key, sep, value = line.partition(":")
            key = key.strip()
            if not sep or key not in _OPTION_KEYS:
                raise ParseError(f"line {lineno}: unknown option {line!r}")
            options[key] = value.strip()
            continue
        if line.startswith("variables:"):
            names = line[len("variables:"):].split()
            if not names:
                raise ParseError(f"line {lineno}: empty variable list")
            for i, name in enumerate(names):
                if name != f"x{i + 1}":
                    raise ParseError(
                        f"line {lineno}: variables must be x1..xn in order, got {name!r}")
            variables = names
            continue
        if variables is None:
            raise ParseError(f"line {lineno}: variables must be declared first")
        n = len(variables)
        if line.startswith("minimize:"):
            if objective is not None:
                raise ParseError(f"line {lineno}: duplicate objective")
            objective = parse_polynomial(line[len("minimize:"):], n)
            continue
        if "==" in line:
            lhs, _, rhs = line.partition("==")
            if rhs.strip() != "0":
                raise ParseError(f"line {lineno}: equality must end in '== 0'")
            equalities.append(parse_polynomial(lhs, n))
            continue
        if ">=" in line:
            lhs, _, rhs = line.partition(">=")
            if rhs.strip() != "0":
                raise ParseError(f"line {lineno}: inequality must end in '>= 0'")
            inequalities.append(parse_polynomial(lhs, n))
            continue
        raise ParseError(f"line {lineno}: unrecognized line {line!r}")
    if variables is None:
        raise ParseError("missing 'variables:' declaration")
    if objective is None:
        raise ParseError("missing 'minimize:' objective")
    prob = Problem(n=len(variables), f=objective,
                   h=tuple(equalities), g=tuple(inequalities))
    _validate_options(options)
    return ProblemFile(problem=prob, options=options)


def _validate_options(options: dict) -> None:
    for key in ("order-min", "order-max"):
        if key in options:
            try:
                if int(options[key]) < 0:
                    raise ValueError
            except ValueError:
                raise ParseError(f"option {key} must be a nonnegative integer")
    if options.get("kind") not in (None, QMODULE, PREORDERING):
        raise ParseError("option kind must be qmodule or preordering")
    if options.get("side") not in (None, "moment", "sos", "both"):
        raise ParseError("option side must be moment, sos or both")
    for key in ("tol-gap", "tol-feas"):
        if key in options:
            try:
                if float(options[key]) <= 0:
                    raise ValueError
            except ValueError:
                raise ParseError(f"option {key} must be a positive number")


def format_problem_file(pf: ProblemFile) -> str:
    prob = pf.problem
    lines = ["variables: " + " ".join(f"x{i + 1}" for i in range(prob.n))]
    lines.append("minimize: " + format_polynomial(prob.f))
    for h in prob.h:
        lines.append(format_polynomial(h) + " == 0")
    for g in prob.g:
        lines.append(format_polynomial(g) + " >= 0")
    if pf.options:
        lines.append("options:")
        for key in _OPTION_KEYS:
            if key in pf.options:
                lines.append(f"{key}: {pf.options[key]}")
    return "\n".join(lines) + "\n"


def load_problem_file(path: str) -> ProblemFile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem_file(fh.read())


# -- transforms -------------------------------------------------------------


def apply_transform(prob: Problem, mode: str) -> Problem:
    if mode == "square-eq":
        return Problem(n=prob.n, f=prob.f, h=(square_equalities(prob.h),),
                       g=prob.g)
    if mode in ("grad", "grad-sq"):
        if prob.h or prob.g:
            raise ValueError("gradient transforms require an unconstrained problem")
        return gradient_problem(prob.f, squared=(mode == "grad-sq"))
    raise ValueError(f"unknown transform mode {mode!r}")


# -- reporting --------------------------------------------------------------


def _sig12(v: Optional[float]) -> Optional[float]:
    return None if v is None else float(f"{v:.12g}")


def run_report(pf: ProblemFile, result: relax.HierarchyResult,
               wall_ms: float) -> dict:
    recs = []
    for r in result.records:
        d = r.to_json()
        d["bound"] = _sig12(d["bound"])
        recs.append(d)
    return {
        "version": REPORT_VERSION,
        "problem": format_problem_file(pf),
        "records": recs,
        "stabilized": result.stabilized,
        "wall_ms": round(wall_ms, 3),
    }


def _print_table(result: relax.HierarchyResult, out=None) -> None:
    out = out or sys.stdout
    print(f"{'k':>3} {'side':<7} {'bound':>14} {'status':<26} "
          f"{'flat':<5} points", file=out)
    for r in result.records:
        bound = "-" if r.bound is None else f"{r.bound:.6g}"
        flat = "-" if r.flat is None else str(r.flat).lower()
        pts = " ".join("(" + ", ".join(f"{v:.4g}" for v in p) + ")"
                       for p in r.points)
        print(f"{r.k:>3} {r.side:<7} {bound:>14} {r.status:<26} {flat:<5} {pts}",
              file=out)


# -- subcommands ------------------------------------------------------------


def cmd_solve(args) -> int:
    try:
        pf = load_problem_file(args.file)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    prob = pf.problem
    if args.transform:
        try:
            prob = apply_transform(prob, args.transform)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
    opts = pf.options
    kind = args.kind or opts.get("kind") or QMODULE
    side = args.side or opts.get("side") or "moment"
    sides = ("moment", "sos") if side == "both" else (side,)
    default = relax.default_order_range(prob)
    k_min = args.order_min if args.order_min is not None else \
        int(opts.get("order-min", default.start))
    k_max = args.order_max if args.order_max is not None else \
        int(opts.get("order-max", default.stop - 1))
    if k_max < k_min:
        print("error: --order-max below --order-min", file=sys.stderr)
        return EXIT_PARSE
    hopts = relax.HierarchyOptions(seed=args.seed)
    if "tol-gap" in opts:
        hopts.tol_gap = float(opts["tol-gap"])
    if "tol-feas" in opts:
        hopts.tol_feas = float(opts["tol-feas"])
    t0 = time.perf_counter()
    try:
        result = relax.run_hierarchy(prob, range(k_min, k_max + 1), kind=kind,
                                     sides=sides, options=hopts)
    except Exception as exc:  # solver-fatal
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    wall_ms = (time.perf_counter() - t0) * 1e3
    _print_table(result)
    if result.stabilized:
        print("stabilized (flat truncation and stalled bound)")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(run_report(pf, result, wall_ms), fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        pf = load_problem_file(args.file)
        cert = Certificate.load(args.certificate, pf.problem.n)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ParseError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    verdict = verify_certificate(pf.problem, cert, tol=args.tol)
    if verdict.ok:
        print(f"{verdict.status}: f >= {cert.gamma} at order k={cert.k}")
        return EXIT_OK
    print(f"invalid: {verdict.reason}")
    return EXIT_INVALID


def cmd_transform(args) -> int:
    try:
        pf = load_problem_file(args.file)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        prob = apply_transform(pf.problem, args.mode)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    text = format_problem_file(ProblemFile(problem=prob, options=pf.options))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_suite(args) -> int:
    fixtures = list(all_fixtures().values())
    if args.only:
        fixtures = [fx for fx in fixtures if args.only in fx.name]
        if not fixtures:
            print(f"error: no fixture matches {args.only!r}", file=sys.stderr)
            return EXIT_PARSE
    loosened = args.tol_gap is not None and args.tol_gap > 1e-8
    hopts = relax.HierarchyOptions(seed=args.seed)
    if args.tol_gap is not None:
        hopts.tol_gap = args.tol_gap
    all_ok = True
    rows = []
    for fx in fixtures:
        if fx.certificate is not None:
            verdict = verify_certificate(fx.problem, fx.certificate)
            ok = verdict.status == "valid"
            all_ok &= ok
            rows.append((fx.name, "certificate (exact)",
                         "pass" if ok else f"FAIL ({verdict.reason})"))
        for run in fx.runs:
            res = relax.run_hierarchy(fx.problem, [run.k], kind=run.kind,
                                      sides=(run.side,), options=hopts)
            rec = res.records[0]
            label = f"{run.side} k={run.k} ({run.kind})"
            if run.expected is None:
                ok = rec.bound is not None
                note = "pass" if ok else "FAIL (no bound)"
            elif rec.bound is not None and abs(rec.bound - run.expected) <= run.tol:
                ok, note = True, f"pass ({rec.bound:.6g})"
            elif loosened:
                ok, note = True, f"degraded ({rec.bound:.6g} vs {run.expected:.6g})"
            else:
                ok = False
                got = "none" if rec.bound is None else f"{rec.bound:.6g}"
                note = f"FAIL ({got} vs {run.expected:.6g}, {rec.status})"
            all_ok &= ok
            rows.append((fx.name, label, note))
    width = max(len(r[0]) for r in rows) + 2
    lwidth = max(len(r[1]) for r in rows) + 2
    for name, label, note in rows:
        print(f"{name:<{width}} {label:<{lwidth}} {note}")
    print("suite:", "pass" if all_ok else "FAIL")
    return EXIT_OK if all_ok else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="momentsos",
        description="Polynomial optimization via moment/SOS relaxations")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run a relaxation hierarchy on a problem file")
    sp.add_argument("file")
    sp.add_argument("--order-min", type=int, default=None)
    sp.add_argument("--order-max", type=int, default=None)
    sp.add_argument("--kind", choices=[QMODULE, PREORDERING], default=None)
    sp.add_argument("--side", choices=["moment", "sos", "both"], default=None)
    sp.add_argument("--transform", choices=["square-eq", "grad", "grad-sq"],
                    default=None)
    sp.add_argument("--json", metavar="OUT", default=None,
                    help="write a machine-readable report")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_solve)

    vp = sub.add_parser("verify", help="check a lower-bound certificate")
    vp.add_argument("file")
    vp.add_argument("certificate")
    vp.add_argument("--tol", type=float, default=None,
                    help="residual tolerance for float certificates")
    vp.set_defaults(func=cmd_verify)

    tp = sub.add_parser("transform", help="rewrite a problem file")
    tp.add_argument("file")
    tp.add_argument("--mode", choices=["square-eq", "grad", "grad-sq"],
                    required=True)
    tp.add_argument("-o", "--output", default=None)
    tp.set_defaults(func=cmd_transform)

    up = sub.add_parser("suite", help="replay the built-in example fixtures")
    up.add_argument("--only", default=None, help="substring filter on fixture names")
    up.add_argument("--tol-gap", type=float, default=None)
    up.add_argument("--seed", type=int, default=0)
    up.set_defaults(func=cmd_suite)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
