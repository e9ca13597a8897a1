"""Command-line entry point: ``vhbound <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure. Errors are
written to stderr as one JSON object ``{"error", "message", "exit_code"}``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .experiment import (ExperimentConfig, read_jsonl, render_table, row_to_json, rows_to_csv,
                         run_experiment)
from .linalg import NotPositiveDefinite
from .oracles import (DimensionTooLarge, EffectiveSampleSizeTooLow, OracleEstimate, oracle_grid,
                      oracle_importance)
from .optimize import LineSearchFailure
from .posterior import InconsistentInputs, build_posteriors, certify
from .problem import (InstanceSpec, InvalidProblem, SchemaError, check_problem, generate_instance,
                      load_problem, problem_to_json)
from .quadrature import NonFiniteIntegral
from .vb import UnsupportedFactor, VbOptions, vb_maximize
from .vh import HolderOptions, minimize

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

_INVALID = (InvalidProblem, SchemaError, InconsistentInputs, DimensionTooLarge, UnsupportedFactor,
            FileNotFoundError, IsADirectoryError, ValueError)
_NUMERICAL = (NonFiniteIntegral, NotPositiveDefinite, LineSearchFailure, EffectiveSampleSizeTooLow,
              ArithmeticError, np.linalg.LinAlgError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message, EXIT_INVALID)


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    sys.exit(code)


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.ndarray):
        return [_num(x) for x in v.tolist()]
    if isinstance(v, list):
        return [_num(x) for x in v]
    return v


def _emit(obj, out=None):
    text = json.dumps({k: _num(v) for k, v in obj.items()}, indent=1) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def _load(path):
    return check_problem(load_problem(path))


def _holder_options(args):
    return HolderOptions(max_iterations=args.max_iter, gradient_tolerance=args.grad_tol)


def cmd_generate(args):
    pattern = None
    if args.truncated is not None:
        if len(args.truncated) != args.n or set(args.truncated) - {"0", "1"}:
            raise InvalidProblem("truncation_pattern", "use a 0/1 string of length n")
        pattern = tuple(c == "1" for c in args.truncated)
    problem = generate_instance(InstanceSpec(args.n, args.kappa, args.seed, pattern))
    text = json.dumps(problem_to_json(problem), indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _solve_vh(problem, args):
    return minimize(problem, options=_holder_options(args))


def cmd_solve_vh(args):
    res = _solve_vh(_load(args.inp), args)
    _emit({"log_bound": res.log_bound, "alpha1": res.alpha1, "converged": res.converged,
           "status": res.status, "iterations": res.iterations,
           "gradient_norm": res.gradient_norm, "tau1": res.params.tau1,
           "tau2": res.params.tau2, "s": res.params.s}, args.out)


def cmd_solve_vb(args):
    opts = VbOptions(max_iterations=args.max_iter, gradient_tolerance=args.grad_tol, seed=args.seed)
    res = vb_maximize(_load(args.inp), opts)
    _emit({"lower_bound": res.lower_bound, "converged": res.converged, "status": res.status,
           "iterations": res.iterations, "gradient_norm": res.gradient_norm,
           "mu": res.params.mu, "sigma": res.params.sigma, "mean": res.mean}, args.out)


def cmd_oracle(args):
    problem = _load(args.inp)
    method = args.method
    if method == "auto":
        method = "grid" if problem.n <= 3 else "importance"
    if method == "grid":
        est = oracle_grid(problem)
    else:
        pair = build_posteriors(problem, _solve_vh(problem, args).params)
        est = oracle_importance(problem, pair, args.samples, args.seed)
    out = {"log_integral": est.log_integral, "uncertainty": est.uncertainty,
           "method": est.method, "size": est.size}
    if est.method == "importance":
        out["ess"] = est.ess
        out["mean"] = est.mean
    _emit(out, args.out)


def _value(text, key):
    """A float given directly, or ``key`` read from a JSON file written by this tool."""
    try:
        return float(text), None
    except ValueError:
        obj = json.loads(Path(text).read_text())
        return float(obj[key]), obj


def cmd_certify(args):
    bound, bound_obj = _value(args.bound, "log_bound")
    log_i, oracle_obj = _value(args.oracle, "log_integral")
    se = args.oracle_se
    if se is None:
        se = float(oracle_obj.get("uncertainty", 0.0)) if oracle_obj else 0.0
    alpha1 = args.alpha1
    if alpha1 is None:
        alpha1 = float(bound_obj["alpha1"]) if bound_obj and "alpha1" in bound_obj else 2.0
    cert = certify(bound, OracleEstimate(log_i, se, "given", 0), alpha1)
    _emit({"epsilon": cert.epsilon, "distance_bound": cert.distance_bound,
           "certified": cert.certified, "raw_epsilon": cert.raw_epsilon,
           "clipped": cert.clipped}, args.out)


def cmd_experiment(args):
    cells = [(k, n) for k in args.kappa for n in args.n]
    seeds = range(args.seed, args.seed + args.seeds)
    config = ExperimentConfig(cells, tuple(seeds), args.method, args.samples, args.max_iter,
                              args.grad_tol, args.out, args.csv)
    run_experiment(config, on_row=lambda r: sys.stdout.write(row_to_json(r) + "\n"))


def cmd_report(args):
    rows = read_jsonl(args.inp)
    timing = not args.no_timing
    if args.format == "csv":
        text = rows_to_csv(rows, timing=timing)
    elif args.format == "jsonl":
        text = "".join(row_to_json(r, timing=timing) + "\n" for r in rows)
    else:
        text = render_table(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser():
    p = _Parser(prog="vhbound", description="Holder and mean-field bounds for truncated Gaussian integrals")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_flags(sp):
        sp.add_argument("--max-iter", type=int, default=500)
        sp.add_argument("--grad-tol", type=float, default=1e-7)

    g = sub.add_parser("generate", help="write a seeded instance A = kappa I + v v'")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--kappa", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--truncated", help="0/1 string selecting step factors (default: all)")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    for name, func, help_ in (("solve-vh", cmd_solve_vh, "minimise the Holder upper bound"),
                              ("solve-vb", cmd_solve_vb, "maximise the mean-field lower bound")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--in", dest="inp", required=True)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")
        solver_flags(sp)
        sp.set_defaults(func=func)

    o = sub.add_parser("oracle", help="reference value of log I*")
    o.add_argument("--in", dest="inp", required=True)
    o.add_argument("--method", choices=("auto", "grid", "importance"), default="auto")
    o.add_argument("--samples", type=int, default=100_000)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out")
    solver_flags(o)
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("certify", help="relative gap and L1 certificate")
    c.add_argument("--bound", required=True, help="log bound, or a solve-vh output file")
    c.add_argument("--oracle", required=True, help="log I* estimate, or an oracle output file")
    c.add_argument("--oracle-se", type=float)
    c.add_argument("--alpha1", type=float)
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    e = sub.add_parser("experiment", help="run a (kappa, n) sweep and stream JSONL rows")
    e.add_argument("--kappa", type=float, nargs="+", default=[0.1, 1.0])
    e.add_argument("--n", type=int, nargs="+", default=[5, 20, 50])
    e.add_argument("--seed", type=int, default=0, help="first seed")
    e.add_argument("--seeds", type=int, default=3, help="seeds per cell")
    e.add_argument("--samples", type=int, default=100_000)
    e.add_argument("--method", choices=("auto", "grid", "importance"), default="auto")
    e.add_argument("--out", help="JSONL path")
    e.add_argument("--csv", help="CSV path")
    solver_flags(e)
    e.set_defaults(func=cmd_experiment)

    r = sub.add_parser("report", help="render JSONL rows as CSV, JSONL or a text table")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--format", choices=("csv", "jsonl", "table"), default="table")
    r.add_argument("--no-timing", action="store_true", help="drop wall-time columns")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except _NUMERICAL as exc:
        _fail(type(exc).__name__, str(exc), EXIT_NUMERICAL)
    except _INVALID as exc:
        _fail(type(exc).__name__, str(exc), EXIT_INVALID)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        _fail(type(exc).__name__, str(exc), EXIT_INVALID)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
