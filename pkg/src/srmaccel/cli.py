"""Benchmark harness.

Subcommands:
  run      solve one instance, print/write a JSON report, optionally a CSV trace
  compare  sweep grid sizes / theta values / methods into a flat CSV table
  sweep-p  vary the acceleration depth p on one instance

Exit codes: 0 converged, 1 configuration or evaluation failure, 2 budget
exhausted, 64 usage error.  Pass --plot to render a figure next to the data.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from .config import SolverConfig
from .problems import bratu2d, bratu3d, linear_problem
from .solver import (
    STATUS_CONVERGED,
    STATUS_MAX_FEVALS,
    STATUS_MAX_ITERATIONS,
    solve,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BUDGET = 2
EXIT_USAGE = 64

METHODS = ("accel-dfsane", "dfsane", "anderson")
PROBLEMS = ("bratu2d", "bratu3d", "linear")

# Per-problem (h_init, h_small, h_large) used when flags are not given.
H_DEFAULTS = {
    "bratu2d": (0.01, 1e-4, 0.1),
    "bratu3d": (1.0, 0.1, 0.1),
    "linear": (1.0, 0.1, 0.1),
}

TRACE_FIELDS = ("k", "residual_norm", "cumulative_fevals", "elapsed_seconds", "branch")
COMPARE_FIELDS = ("problem", "np", "theta", "n", "method", "status",
                  "final_residual_norm", "iterations", "fevals", "elapsed_seconds")
SWEEP_FIELDS = ("p", "status", "iterations", "fevals", "elapsed_seconds")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 64 on usage errors.

    Tokens starting with '-<digit>' are always treated as values so that
    negative lists like '--theta -100,10' parse.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-\d")

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _float_list(text):
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _p_list(text):
    """Depth list: comma separated values or an inclusive range 'a:b'."""
    if ":" in text:
        lo, _, hi = text.partition(":")
        try:
            lo, hi = int(lo), int(hi)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range: {text!r}")
        if hi < lo:
            raise argparse.ArgumentTypeError("empty range")
        return list(range(lo, hi + 1))
    return _int_list(text)


def _method_list(text):
    methods = [t.strip() for t in text.split(",") if t.strip()]
    if not methods:
        raise argparse.ArgumentTypeError("empty method list")
    for m in methods:
        if m not in METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}")
    return methods


def build_parser() -> _Parser:
    parser = _Parser(prog="srm-bench",
                     description="Benchmark harness for derivative-free "
                                 "residual solvers")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def common(p, methods_as_list=False):
        p.add_argument("--problem", required=True, choices=PROBLEMS)
        p.add_argument("--theta", type=(_float_list if methods_as_list else float),
                       default=[-100.0] if methods_as_list else -100.0,
                       help="Bratu nonlinearity coefficient")
        p.add_argument("--n", type=int, help="size of the linear problem")
        p.add_argument("--beta", type=float, default=1.0,
                       help="Anderson Mixing damping")
        p.add_argument("--h-init", type=float, dest="h_init")
        p.add_argument("--h-small", type=float, dest="h_small")
        p.add_argument("--h-large", type=float, dest="h_large")
        p.add_argument("--eps-scale", type=float, default=1e-6, dest="eps_scale",
                       help="stopping tolerance is eps_scale*sqrt(n)")
        p.add_argument("--max-iter", type=int, default=1_000_000, dest="max_iter")
        p.add_argument("--max-fevals", type=int, default=2_000_000, dest="max_fevals")
        p.add_argument("--sigma-strategy", choices=("conservative", "spectral"),
                       dest="sigma_strategy")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--plot", help="render a figure to this path")

    p_run = sub.add_parser("run", help="solve a single instance")
    common(p_run)
    p_run.add_argument("--np", type=int, dest="n_p", help="grid points per axis")
    p_run.add_argument("--method", required=True, choices=METHODS)
    p_run.add_argument("--p", type=int, default=5, help="acceleration depth")
    p_run.add_argument("--trace", help="write the per-iteration CSV trace here")
    p_run.add_argument("--json", dest="json_path", help="also write the report here")

    p_cmp = sub.add_parser("compare", help="sweep np/theta/method into a CSV table")
    common(p_cmp, methods_as_list=True)
    p_cmp.add_argument("--np", type=_int_list, dest="n_p", required=True,
                       help="comma separated grid sizes")
    p_cmp.add_argument("--method", required=True, type=_method_list)
    p_cmp.add_argument("--p", type=int, default=5)
    p_cmp.add_argument("--csv", required=True, help="output table path")
    p_cmp.add_argument("--workers", type=int, default=1)

    p_swp = sub.add_parser("sweep-p", help="vary the acceleration depth")
    common(p_swp)
    p_swp.add_argument("--np", type=int, dest="n_p", help="grid points per axis")
    p_swp.add_argument("--method", default="accel-dfsane", choices=METHODS)
    p_swp.add_argument("--p", type=_p_list, required=True,
                       help="comma list or inclusive range a:b")
    p_swp.add_argument("--csv", required=True, help="output table path")
    p_swp.add_argument("--workers", type=int, default=1)

    return parser


def _build_problem(parser, args, n_p=None, theta=None):
    if args.problem == "linear":
        if args.n is None or args.n < 1:
            parser.error("--problem linear requires --n >= 1")
        diag = np.linspace(1.0, 2.0, args.n)
        return linear_problem(np.diag(diag), diag.copy())
    if n_p is None or n_p < 3:
        parser.error(f"--problem {args.problem} requires --np >= 3")
    make = bratu2d if args.problem == "bratu2d" else bratu3d
    return make(n_p, theta)


def _build_config(args, problem, method, depth):
    h_init, h_small, h_large = H_DEFAULTS[args.problem]
    mode = {"accel-dfsane": "secant", "dfsane": "none", "anderson": "anderson"}[method]
    return SolverConfig(
        tol=args.eps_scale * np.sqrt(problem.dim),
        depth=depth,
        accel_mode=mode,
        anderson_beta=args.beta,
        h_init=args.h_init if args.h_init is not None else h_init,
        h_small=args.h_small if args.h_small is not None else h_small,
        h_large=args.h_large if args.h_large is not None else h_large,
        sigma_strategy=args.sigma_strategy,
        max_iters=args.max_iter,
        max_fevals=args.max_fevals,
        seed=args.seed,
    )


def _execute(problem, cfg):
    t0 = time.perf_counter()
    report = solve(problem, np.zeros(problem.dim), cfg)
    return report, time.perf_counter() - t0


def _status_exit(status):
    if status == STATUS_CONVERGED:
        return EXIT_OK
    if status in (STATUS_MAX_ITERATIONS, STATUS_MAX_FEVALS):
        return EXIT_BUDGET
    return EXIT_FAILURE


def _write_trace(path, trace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for e in trace:
            writer.writerow([e.k, f"{e.residual_norm:.16e}", e.cumulative_fevals,
                             f"{e.elapsed_seconds:.6f}", e.branch])


def _write_rows(path, fields, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def _cmd_run(parser, args):
    problem = _build_problem(parser, args, args.n_p, args.theta)
    try:
        cfg = _build_config(args, problem, args.method, args.p)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    report, elapsed = _execute(problem, cfg)
    doc = {
        "problem": args.problem,
        "params": dict(problem.params),
        "method": args.method,
        "n": problem.dim,
        "eps": cfg.tol,
        "status": report.status,
        "iterations": report.iterations,
        "fevals": report.fevals,
        "final_residual_norm": report.final_residual_norm,
        "elapsed_seconds": round(elapsed, 3),
        "config_echo": asdict(cfg),
    }
    text = json.dumps(doc, indent=2)
    print(text)
    if args.json_path:
        with open(args.json_path, "w") as fh:
            fh.write(text + "\n")
    if args.trace:
        _write_trace(args.trace, report.trace)
    if args.plot:
        from . import figures
        figures.plot_run_trace(
            report.trace, args.plot,
            title=f"{args.problem} {problem.params} [{args.method}]")
    return _status_exit(report.status)


def _cmd_compare(parser, args):
    if args.problem == "linear":
        parser.error("compare sweeps grid problems; use 'run' for linear")
    specs = [(n_p, theta, method)
             for n_p in args.n_p
             for theta in args.theta
             for method in args.method]

    def one(spec):
        n_p, theta, method = spec
        problem = _build_problem(parser, args, n_p, theta)
        cfg = _build_config(args, problem, method, args.p)
        report, elapsed = _execute(problem, cfg)
        return {
            "problem": args.problem, "np": n_p, "theta": theta,
            "n": problem.dim, "method": method, "status": report.status,
            "final_residual_norm": f"{report.final_residual_norm:.16e}",
            "iterations": report.iterations, "fevals": report.fevals,
            "elapsed_seconds": round(elapsed, 3),
        }

    try:
        rows = _run_all(one, specs, args.workers)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _write_rows(args.csv, COMPARE_FIELDS, rows)
    if args.plot:
        from . import figures
        x_field = "theta" if len(args.theta) > 1 else "np"
        plot_rows = [dict(r, fevals=int(r["fevals"]),
                          elapsed_seconds=float(r["elapsed_seconds"]))
                     for r in rows]
        figures.plot_compare(plot_rows, x_field, args.plot)
    return max(_status_exit(r["status"]) for r in rows)


def _cmd_sweep_p(parser, args):
    if args.method == "anderson":
        parser.error("sweep-p applies to the secant-accelerated method")

    def one(depth):
        problem = _build_problem(parser, args, args.n_p, args.theta)
        cfg = _build_config(args, problem, args.method, depth)
        report, elapsed = _execute(problem, cfg)
        return {
            "p": depth, "status": report.status,
            "iterations": report.iterations, "fevals": report.fevals,
            "elapsed_seconds": round(elapsed, 3),
        }

    try:
        rows = _run_all(one, args.p, args.workers)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _write_rows(args.csv, SWEEP_FIELDS, rows)
    if args.plot:
        from . import figures
        figures.plot_depth_sweep(rows, args.plot)
    return max(_status_exit(r["status"]) for r in rows)


def _run_all(fn, specs, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, specs))
    return [fn(s) for s in specs]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(parser, args)
    if args.command == "compare":
        return _cmd_compare(parser, args)
    return _cmd_sweep_p(parser, args)


if __name__ == "__main__":
    sys.exit(main())
