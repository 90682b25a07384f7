"""Command-line front end: ``solve``, ``audit`` and ``bench``."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from pathlib import Path

import numpy as np

from .congestion import SolverError
from .driver import METHODS, BudgetError, Config, IterationLimitError, maxflow
from .generators import FAMILIES, family_instance
from .graph import DimacsError, format_flow, parse_dimacs
from .steps import StepError
from .trace import Trace

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2
BREAKDOWNS = (StepError, SolverError, BudgetError, IterationLimitError, np.linalg.LinAlgError,
              ArithmeticError)


def _config(args: argparse.Namespace) -> Config:
    kw = {"method": args.method, "eta": args.eta}
    if getattr(args, "tol", None) is not None:
        kw["eps"] = args.tol
    if getattr(args, "max_iters", None) is not None:
        kw["max_iters"] = args.max_iters
    if getattr(args, "lenient_budget", False):
        kw["strict_budget"] = False
    return Config(**kw)


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        g = parse_dimacs(Path(args.input).read_bytes())
    except (OSError, DimacsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        cfg = _config(args)
        res = maxflow(g, cfg)
    except BREAKDOWNS as exc:
        print(f"solver breakdown: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.trace:
        res.trace.write(args.trace)
    out = format_flow(res.flow, res.value)
    if args.output:
        Path(args.output).write_text(out)
        sys.stdout.write(f"s {res.value}\n")
    else:
        sys.stdout.write(out)
    sys.stdout.write(f"c value {res.value}\n")
    sys.stdout.write(f"c iterations {res.iterations}\n")
    sys.stdout.write(f"c wall_ms {res.wall_time * 1000:.1f}\n")
    return EXIT_OK


# -- audit --------------------------------------------------------------------

def _num(rec: dict, key: str) -> float | None:
    v = rec.get(key)
    if v is None:
        return None
    if v == "inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return float(v)


def audit_records(records: list[dict], strict: bool = False) -> dict[str, list[str]]:
    """Re-check every trace record; maps invariant name to its failure messages."""
    checks = ("center-contract", "progress-coupling", "budget", "rho-energy-identity",
              "rho2-bound", "boost-items", "boost-energy", "monotone-progress")
    fails: dict[str, list[str]] = {c: [] for c in checks}
    last_F = None
    for i, rec in enumerate(records):
        phase = rec.get("phase")
        m = _num(rec, "m")
        w = _num(rec, "w_l1")
        if m is not None and w is not None:
            if w > 3 * m * (1 + 1e-12):
                fails["budget"].append(f"record {i}: w_l1 {w:.6g} > 3m = {3 * m:g}")
        elif strict:
            fails["budget"].append(f"record {i}: missing m or w_l1")
        if phase == "center":
            cin, cout = _num(rec, "coupling_in"), _num(rec, "coupling")
            if cin is None or cout is None:
                if strict:
                    fails["center-contract"].append(f"record {i}: missing couplings")
            elif cout > 10 * cin * cin + 1e-12:
                fails["center-contract"].append(
                    f"record {i}: coupling {cout:.3g} > 10 * {cin:.3g}^2 + 1e-12")
        elif phase == "progress":
            c = _num(rec, "coupling")
            if c is not None and c > 0.01:
                fails["progress-coupling"].append(f"record {i}: coupling {c:.3g} > 1/100")
            rho2, energy = _num(rec, "rho2"), _num(rec, "energy")
            if rho2 is not None and energy is not None:
                if abs(rho2 * rho2 - energy) > 1e-8 * max(energy, 1e-300):
                    fails["rho-energy-identity"].append(
                        f"record {i}: rho2^2 {rho2 * rho2:.12g} != energy {energy:.12g}")
            elif strict:
                fails["rho-energy-identity"].append(f"record {i}: missing rho2 or energy")
            ts, tin, ep, win = (_num(rec, k) for k in ("t_star", "t_in", "energy_point", "w_l1_in"))
            if None not in (ts, tin, ep, win, m) and win <= 3 * m and ts > tin:
                if ep > 1500 * m / (ts - tin) ** 2 * (1 + 1e-9):
                    fails["rho2-bound"].append(f"record {i}: rho2^2 {ep:.4g} above 1500 m F_t^-2")
            for key in ("item3_ratio", "item4_ratio"):
                v = _num(rec, key)
                if v is not None and v > 1 + 1e-9:
                    fails["boost-items"].append(f"record {i}: {key} {v:.4g} > 1")
            eb, ea = _num(rec, "energy_before_boost"), _num(rec, "energy_after_boost")
            if eb is not None and ea is not None and ea < eb * (1 - 1e-9):
                fails["boost-energy"].append(f"record {i}: energy fell {eb:.6g} -> {ea:.6g}")
            F = _num(rec, "F_t_cert")
            if F is not None:
                if last_F is not None and not F < last_F:
                    fails["monotone-progress"].append(
                        f"record {i}: F_t certificate {F:.6g} did not drop below {last_F:.6g}")
                last_F = F
    return fails


def cmd_audit(args: argparse.Namespace) -> int:
    try:
        tr = Trace.from_jsonl(Path(args.trace).read_text())
    except (OSError, ValueError) as exc:
        print(f"error: malformed trace: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not tr.records:
        print("warning: empty trace, nothing to audit", file=sys.stderr)
        return EXIT_OK
    try:
        fails = audit_records(tr.records, strict=args.strict)
    except (TypeError, ValueError) as exc:
        print(f"error: malformed trace: {exc}", file=sys.stderr)
        return EXIT_INPUT
    width = max(len(k) for k in fails)
    for name, msgs in fails.items():
        status = "PASS" if not msgs else f"FAIL ({len(msgs)})"
        print(f"{name:<{width}}  {status}")
        for msg in msgs[:5]:
            print(f"    {msg}")
    return EXIT_OK if not any(fails.values()) else EXIT_INPUT


# -- bench --------------------------------------------------------------------

BENCH_COLUMNS = ("instance", "m", "n", "U", "method", "value", "iterations", "wall_ms")


def run_bench(family: str, sizes: list[int], seed: int, methods: list[str], U: int = 1,
              eta: float | None = None, repeats: int = 1, timing: bool = True,
              max_iters: int | None = None) -> str:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    rng = np.random.default_rng(seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for size in sorted(sizes):
        for rep in range(repeats):
            g = family_instance(family, rng, size, U)
            name = f"{family}-{size}-{rep}"
            for method in methods:
                cfg = Config(method=method, eta=eta if method == "ipm" else None,
                             strict_budget=False, max_iters=max_iters)
                start = time.perf_counter()
                try:
                    res = maxflow(g, cfg)
                    value, iters = str(res.value), str(res.iterations)
                except BREAKDOWNS as exc:
                    value, iters = f"error:{type(exc).__name__}", ""
                ms = (time.perf_counter() - start) * 1000 if timing else 0.0
                w.writerow((name, g.m, g.n, int(g.U), method, value, iters, f"{ms:.1f}"))
    return buf.getvalue()


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
        methods = [s.strip() for s in args.methods.split(",") if s.strip()]
        bad = [x for x in methods if x not in METHODS]
        if bad:
            raise ValueError(f"unknown method {bad[0]!r}")
        out = run_bench(args.family, sizes, args.seed, methods, args.U, args.eta,
                        args.repeats, not args.no_timing, args.max_iters)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ipmflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a DIMACS max-flow instance")
    p.add_argument("input")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--method", choices=METHODS, default="ipm")
    p.add_argument("--trace", default=None, help="write the JSON-lines trace here")
    p.add_argument("--tol", type=float, default=None, help="Laplacian solve accuracy")
    p.add_argument("--output", default=None, help="write the flow file here")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--lenient-budget", action="store_true",
                   help="record weight-budget violations instead of aborting")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("audit", help="re-check a trace against the invariants")
    p.add_argument("trace")
    p.add_argument("--strict", action="store_true", help="missing fields count as failures")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bench", help="CSV benchmark over a seeded graph family")
    p.add_argument("--family", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated edge counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", default="dinic,ipm")
    p.add_argument("--U", type=int, default=1)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--no-timing", action="store_true", help="write wall_ms as 0.0")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
