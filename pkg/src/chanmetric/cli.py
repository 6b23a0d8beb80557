"""Command-line driver.

Exit codes: 0 ok, 2 invalid configuration, 3 numerical failure,
4 memory budget exceeded, 5 degenerate estimator.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .channels import BudgetExceeded, CHOI_BUDGET, SpecError
from .estim import STRATEGIES, DegenerateStrategy, rate_scan
from .linalg import NumericalFailure
from .metrics import (
    catalog_mixtures, classical_channel_min, cp_ball, g_max_upper, g_min, g_r_output, parallel_scaling,
)
from .report import ReportRecord, svg_line_plot, write_csv
from .specfile import family_from_spec, load_spec

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_BUDGET, EXIT_DEGENERATE = 0, 2, 3, 4, 5

METRIC_KINDS = ("min", "r", "max", "cpball", "classical")


def _add_family_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--family", help="catalog family name")
    src.add_argument("--spec", help="channel-spec JSON file")
    p.add_argument("--params", default="{}", help="family parameters as a JSON object")
    p.add_argument("--theta", type=float, default=None, help="parameter value (overrides theta in a --spec file)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--record", help="write the JSON report record here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chanmetric", description="Monotone metrics on quantum channel families.")
    parser.add_argument("--version", action="version", version=f"chanmetric {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    m = sub.add_parser("metric", help="compute one metric or bound at a point")
    m.add_argument("kind", choices=METRIC_KINDS)
    _add_family_args(m)
    m.add_argument("--restarts", type=int, default=16)
    m.add_argument("--tol", type=float, default=None)
    m.add_argument("--max-iter", type=int, default=None)

    s = sub.add_parser("scaling", help="g_min of n parallel copies divided by n")
    _add_family_args(s)
    s.add_argument("--n-max", type=int, required=True)
    s.add_argument("--restarts", type=int, default=16)
    s.add_argument("--csv")
    s.add_argument("--svg")

    e = sub.add_parser("simulate", help="Monte Carlo estimation and rate scan")
    _add_family_args(e)
    e.add_argument("--povm", default="bell", help=f"strategy: one of {', '.join(STRATEGIES)}")
    e.add_argument("--estimator", default="mle_grid", choices=("mle_grid", "mle_newton"))
    e.add_argument("--n-list", default="250,500,1000,2000")
    e.add_argument("--trials", type=int, default=2000)
    e.add_argument("--csv")
    e.add_argument("--svg")
    return parser


def _resolve(args) -> tuple:
    try:
        params = json.loads(args.params)
    except json.JSONDecodeError as exc:
        raise SpecError("params", f"invalid JSON: {exc}") from None
    if args.spec:
        spec = load_spec(args.spec)
    elif args.family:
        spec = {"name": args.family, "params": params}
    else:
        raise SpecError("family", "give --family or --spec")
    if args.family is not None:
        spec = {**spec, "name": args.family}
    if args.theta is not None:
        spec = {**spec, "theta": args.theta}
    family, theta = family_from_spec(spec)
    if not math.isfinite(theta):
        raise SpecError("theta", "must be finite")
    return family, theta, spec


def _config(args, spec) -> dict:
    skip = {"record", "csv", "svg", "spec", "family", "params", "theta"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip}
    cfg["spec"] = spec
    return cfg


def _metric(args, family, theta) -> dict:
    phi, delta = family.local(theta)
    opts = {"restarts": args.restarts, "seed": args.seed}
    if args.tol is not None:
        opts["tol"] = args.tol
    if args.max_iter is not None:
        opts["max_iter"] = args.max_iter
    kind = args.kind
    if kind == "min":
        rep = g_min(phi, delta, **opts)
    elif kind == "r":
        rep = g_r_output(phi, delta, **opts)
    elif kind == "classical":
        try:
            value = classical_channel_min(family, theta)
        except ValueError as exc:
            raise SpecError("family", str(exc)) from None
        print(f"classical_min = {value!r}")
        return {"value": value}
    else:
        ball = cp_ball(phi, delta)
        rep = g_max_upper(phi, delta, catalog_mixtures(family, theta))
        print(f"eps = {float(ball.eps)!r}" + (" (capped)" if ball.capped else ""))
        print(f"g_max_upper = {rep.value!r}" + (f" ({rep.reason})" if rep.reason else ""))
        return {"eps": float(ball.eps), "eps_capped": ball.capped, "g_max_upper": rep.value, "reason": rep.reason}

    name = {"min": "g_min", "r": "g_r_output"}[kind]
    print(f"{name} = {rep.value!r}" + (f" ({rep.reason})" if rep.reason else ""))
    print(f"restarts = {rep.restarts}, iterations = {rep.iterations}, converged = {rep.converged}")
    return {
        "value": rep.value,
        "reason": rep.reason,
        "restarts": rep.restarts,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "witness": np.asarray(rep.witness),
    }


def _scaling(args, family, theta) -> dict:
    if args.n_max < 1:
        raise SpecError("n_max", "must be >= 1")
    if (family.d_in * family.d_out) ** args.n_max > CHOI_BUDGET:
        raise BudgetExceeded(
            f"n_max={args.n_max} needs Choi dimension {(family.d_in * family.d_out) ** args.n_max} > {CHOI_BUDGET}"
        )
    rows = parallel_scaling(family, theta, args.n_max, restarts=args.restarts, seed=args.seed)
    table = [(r.n, r.g_min_over_n, r.restarts, r.converged) for r in rows]
    header = ("n", "g_min_over_n", "restarts_used", "converged")
    for row in table:
        print(",".join(str(v) for v in row))
    if args.csv:
        write_csv(args.csv, header, table)
    if args.svg:
        svg_line_plot(args.svg, [r[0] for r in table], [r[1] for r in table],
                      title=f"{family.name}, theta={theta:g}", xlabel="n", ylabel="g_min / n")
    return {"columns": list(header), "rows": [list(r) for r in table]}


def _simulate(args, family, theta) -> dict:
    if args.povm not in STRATEGIES:
        raise SpecError("povm", f"unknown strategy {args.povm!r}; expected one of {', '.join(STRATEGIES)}")
    try:
        n_list = [int(x) for x in args.n_list.split(",") if x.strip()]
    except ValueError:
        raise SpecError("n_list", "expected comma-separated integers") from None
    if not n_list or any(n < 1 for n in n_list):
        raise SpecError("n_list", "expected positive integers")
    if args.trials < 1:
        raise SpecError("trials", "must be >= 1")
    try:
        strategy = STRATEGIES[args.povm](family.d_in, estimator=args.estimator)
    except ValueError as exc:
        raise SpecError("povm", str(exc)) from None
    try:
        rep = rate_scan(family, theta, strategy, n_list, args.trials, seed=args.seed)
    except DegenerateStrategy:
        raise
    except ValueError as exc:
        raise SpecError("n_list" if "ascending" in str(exc) else "theta", str(exc)) from None
    header = ("n", "mse", "n_mse", "cr_floor")
    table = [(r.n_uses, r.mse, r.n_times_mse, rep.cr_floor) for r in rep.rows]
    for row in table:
        print(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    print(f"slope = {rep.slope!r}, cr_floor = {rep.cr_floor!r}")
    if args.csv:
        write_csv(args.csv, header, table)
    if args.svg:
        svg_line_plot(args.svg, n_list, [r.mse for r in rep.rows], title=f"{family.name}, theta={theta:g}",
                      xlabel="n", ylabel="MSE", loglog=True)
    return {
        "columns": list(header),
        "rows": [list(r) for r in table],
        "slope": rep.slope,
        "cr_floor": rep.cr_floor,
        "clipped": [r.clipped for r in rep.rows],
        "failed": [r.failed for r in rep.rows],
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        family, theta, spec = _resolve(args)
        runner = {"metric": _metric, "scaling": _scaling, "simulate": _simulate}[args.command]
        results = runner(args, family, theta)
    except SpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except DegenerateStrategy as exc:
        print(f"degenerate estimator: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.record:
        record = ReportRecord(args.command, _config(args, spec), results, __version__,
                              wall_time=time.perf_counter() - start)
        with open(args.record, "w") as fh:
            fh.write(record.to_json() + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
