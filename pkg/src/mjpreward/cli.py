"""Command-line interface: ``mjpreward <command> --config MODEL.json ...``.

Exit codes: 0 success, 1 invalid model, 2 numerical failure, 3 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from typing import Optional, Sequence

import numpy as np

from .cltapprox import coverage_study
from .core import ModelError, validate_model
from .exprlang import ExprError
from .modelfile import ModelFileError, load_model
from .models import BUILTINS, builtin
from .moments import solve_moments
from .odesolve import SolverConfig, SolverError
from .periodic import PeriodicError, solve_periodic
from .resetting import ResetSpec, solve_resetting
from .sim import SimulationError, monte_carlo
from .transition import mixing_profile

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 3

log = logging.getLogger("mjpreward")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    return vals


def _fmt(v) -> str:
    return repr(float(v))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _dump_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2)


def _solver_args(p):
    g = p.add_argument_group("solver")
    g.add_argument("--method", default="rk4", choices=["euler", "rk2", "rk4", "dopri54"])
    g.add_argument("--h", type=float, default=1e-3, help="fixed step (euler/rk2/rk4)")
    g.add_argument("--rtol", type=float, default=1e-8, help="relative tolerance (dopri54)")
    g.add_argument("--atol", type=float, default=1e-10, help="absolute tolerance (dopri54)")
    g.add_argument("--h-max", type=float, default=float("inf"), help="largest adaptive step")


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(args.method, args.h, args.rtol, args.atol, args.h_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mjpreward", description="Moments and the normal approximation of cumulative rewards of Markov jump processes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check model assumptions")
    p.add_argument("--config", required=True, help="model JSON file or built-in model name")
    p.add_argument("--probe-points", type=int, default=64)
    p.add_argument("--horizon", type=float, default=None)

    p = sub.add_parser("moments", help="solve for E R(t) and Var R(t)")
    p.add_argument("--config", required=True, help="model JSON file or built-in model name")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--out", help="CSV file for the solution grid")
    _solver_args(p)

    p = sub.add_parser("simulate", help="Monte-Carlo estimate of the law of R(t)")
    p.add_argument("--config", required=True, help="model JSON file or built-in model name")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--query", type=_float_list, default=[], help="comma-separated points for the empirical CDF")
    p.add_argument("--per-path", help="CSV file with per-path rewards")
    p.add_argument("--out", help="write the summary JSON here as well")

    p = sub.add_parser("coverage", help="coverage of normal quantiles by simulation")
    p.add_argument("--config", required=True, help="model JSON file or built-in model name")
    p.add_argument("--times", type=_float_list, required=True)
    p.add_argument("--levels", type=_float_list, required=True)
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", help="CSV output")
    _solver_args(p)

    p = sub.add_parser("periodic", help="long-run constants of a periodic model")
    p.add_argument("--config", required=True, help="model JSON file or built-in model name")
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--out", help="JSON output")
    p.add_argument("--rho-csv", help="CSV with rho on the grid")
    _solver_args(p)

    p = sub.add_parser("reset", help="statistics under resetting at integer times")
    p.add_argument("--config", required=True, help="model JSON file or built-in model name")
    p.add_argument("--periods", type=int, required=True)
    p.add_argument("--law", type=_float_list, default=None, help="reset pmf (default: the model's initial law)")
    p.add_argument("--out", help="CSV output")
    _solver_args(p)

    p = sub.add_parser("mixing", help="total-variation mixing profile")
    p.add_argument("--config", required=True, help="model JSON file or built-in model name")
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--umax", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--out", help="CSV output")
    _solver_args(p)
    return parser


def _load(path):
    """A JSON model file, or the name of a built-in model."""
    if not os.path.exists(path):
        if path in BUILTINS:
            return builtin(path)
        raise UsageError(f"model file not found: {path}")
    return load_model(path)


def cmd_validate(args) -> int:
    model = _load(args.config)
    report = validate_model(model, args.probe_points, args.horizon)
    print(report)
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_moments(args) -> int:
    model = _load(args.config)
    if not args.t > 0:
        raise UsageError("--t must be positive")
    sol = solve_moments(model, args.t, _config(args))
    print(f"E R(t) = {sol.mean:.12g}")
    print(f"Var R(t) = {sol.variance:.12g}")
    if args.out:
        d = model.d
        header = ["s"] + [f"m_{i}" for i in range(d)] + [f"v_{i}" for i in range(d)] + ["V"]
        _write_csv(args.out, header, [[float(v) for v in row] for row in sol.to_rows()])
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _load(args.config)
    if args.paths < 2:
        raise UsageError("--paths must be at least 2")
    st = monte_carlo(model, args.t, args.paths, args.seed, args.workers, args.query)
    doc = {"horizon": args.t, "seed": args.seed, **st.summary()}
    text = _dump_json(doc)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if args.per_path:
        c = st.components
        rows = [[i, float(c[i].sum()), float(c[i, 0]), float(c[i, 1]), float(c[i, 2]), float(c[i, 3])] for i in range(len(c))]
        _write_csv(args.per_path, ["path_index", "R", "integrated", "jump", "scheduled", "external"], rows)
    return EXIT_OK


def cmd_coverage(args) -> int:
    model = _load(args.config)
    if not args.levels:
        raise UsageError("--levels must not be empty")
    if not args.times:
        raise UsageError("--times must not be empty")
    if any(not 0 < p < 1 for p in args.levels):
        raise UsageError("levels must lie in (0, 1)")
    table = coverage_study(model, args.times, args.levels, args.paths, args.seed, args.workers, _config(args))
    print(table.format())
    if args.out:
        rows = [[r.t, r.p, r.quantile, r.coverage, r.ci_halfwidth] for r in table.rows]
        _write_csv(args.out, ["t", "p", "quantile", "coverage", "ci_halfwidth"], rows)
    return EXIT_OK


def cmd_periodic(args) -> int:
    model = _load(args.config)
    if not model.period:
        print(f"model {model.name!r} declares no period; add a top-level 'period'", file=sys.stderr)
        return EXIT_INVALID
    c = solve_periodic(model, _config(args), args.grid)
    text = _dump_json(c.to_json())
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if args.rho_csv:
        header = ["t"] + [f"rho_{i}" for i in range(model.d)]
        _write_csv(args.rho_csv, header, [[float(t)] + [float(v) for v in row] for t, row in zip(c.grid, c.rho)])
    return EXIT_OK


def cmd_reset(args) -> int:
    model = _load(args.config)
    law = args.law if args.law is not None else model.mu
    if len(law) != model.d:
        raise UsageError(f"--law needs {model.d} probabilities")
    try:
        spec = ResetSpec((law,), args.periods)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = solve_resetting(model, spec, _config(args))
    rows = res.rows()
    print(f"E R(n) = {res.mean:.12g}")
    print(f"Var R(n) = {res.variance:.12g}")
    if args.out:
        _write_csv(args.out, ["period", "E_delta", "Var_delta", "E_cum", "Var_cum"], rows)
    return EXIT_OK


def cmd_mixing(args) -> int:
    model = _load(args.config)
    if not args.step > 0 or args.umax < args.step:
        raise UsageError("need --step > 0 and --umax >= --step")
    us, tv = mixing_profile(model, args.s, args.umax, args.step, _config(args))
    for u, v in zip(us, tv):
        print(f"{u:.6g} {v:.12g}")
    if args.out:
        _write_csv(args.out, ["u", "tv"], [[float(u), float(v)] for u, v in zip(us, tv)])
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "moments": cmd_moments,
    "simulate": cmd_simulate,
    "coverage": cmd_coverage,
    "periodic": cmd_periodic,
    "reset": cmd_reset,
    "mixing": cmd_mixing,
}


def _setup_logging():
    level = os.environ.get("MJP_LOG", "error").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mjpreward: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelFileError, ModelError, ExprError) as exc:
        print(f"mjpreward: invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverError, SimulationError, PeriodicError, FloatingPointError) as exc:
        print(f"mjpreward: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"elapsed {time.perf_counter() - start:.3f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
