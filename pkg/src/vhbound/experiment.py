"""Seeded sweep over (kappa, n) cells comparing the VB lower bound, the VH upper
bound and a reference oracle, with JSONL/CSV reports."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from .oracles import GRID_MAX_DIM, EffectiveSampleSizeTooLow, oracle_grid, oracle_importance
from .posterior import InconsistentInputs, build_posteriors, certify, posterior_moments
from .problem import InstanceSpec, generate_instance
from .vb import VbOptions, vb_maximize
from .vh import HolderOptions, minimize

TIMING_FIELDS = ("time_vh", "time_vb", "time_oracle")
MIN_SAMPLES = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    cells: tuple = ()                     # (kappa, n) pairs
    seeds: tuple = (0,)
    oracle: str = "auto"                  # "auto", "grid" or "importance"
    samples: int = 100_000
    max_iterations: int = 500
    gradient_tolerance: float = 1e-7
    jsonl_path: str | None = None
    csv_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple((float(k), int(n)) for k, n in self.cells))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.cells and not self.seeds:
            raise ValueError("every cell needs at least one seed")
        if self.samples < MIN_SAMPLES:
            raise ValueError(f"sample budget must be at least {MIN_SAMPLES}")
        if self.oracle not in ("auto", "grid", "importance"):
            raise ValueError(f"unknown oracle {self.oracle!r}")


@dataclass
class ReportRow:
    kappa: float
    n: int
    seed: int
    status: str = "ok"
    oracle_method: str = ""
    log_oracle: float = math.nan
    oracle_se: float = math.nan
    log_vb: float = math.nan
    log_vh: float = math.nan
    alpha1: float = math.nan
    epsilon: float = math.nan
    certified_error: float = math.nan
    certified: str = ""
    mean_err_vb_vh: float = math.nan
    mean_err_vh_oracle: float = math.nan
    mean_err_vb_oracle: float = math.nan
    vh_converged: bool = False
    vb_converged: bool = False
    sandwich: bool = False
    message: str = ""
    time_vh: float = math.nan
    time_vb: float = math.nan
    time_oracle: float = math.nan


ROW_FIELDS = tuple(f.name for f in fields(ReportRow))
_FIELD_TYPES = {f.name: f.type for f in fields(ReportRow)}


def sandwich_holds(row, k=3.0):
    """``log_vb <= log_oracle + k se <= log_vh + 2 k se``."""
    se = row.oracle_se if np.isfinite(row.oracle_se) else 0.0
    return bool(row.log_vb <= row.log_oracle + k * se <= row.log_vh + 2.0 * k * se)


def _run_row(kappa, n, seed, config):
    row = ReportRow(kappa, n, seed)
    problem = generate_instance(InstanceSpec(n, kappa, seed))
    vh_opts = HolderOptions(config.max_iterations, config.gradient_tolerance)
    vb_opts = VbOptions(config.max_iterations, config.gradient_tolerance, seed=seed)

    t0 = time.perf_counter()
    vh = minimize(problem, options=vh_opts)
    row.time_vh = time.perf_counter() - t0
    row.log_vh, row.alpha1, row.vh_converged = vh.log_bound, vh.alpha1, vh.converged
    pair = build_posteriors(problem, vh.params)
    mean_vh = posterior_moments(pair)[2]

    t0 = time.perf_counter()
    vb = vb_maximize(problem, vb_opts)
    row.time_vb = time.perf_counter() - t0
    row.log_vb, row.vb_converged = vb.lower_bound, vb.converged
    row.mean_err_vb_vh = float(np.linalg.norm(vb.mean - mean_vh))

    t0 = time.perf_counter()
    # the sampler also supplies the reference posterior mean
    try:
        imp = oracle_importance(problem, pair, config.samples, seed)
    except EffectiveSampleSizeTooLow as exc:
        imp = exc.estimate
        row.status = "low_ess"
    use_grid = config.oracle == "grid" or (config.oracle == "auto" and n <= GRID_MAX_DIM)
    oracle = oracle_grid(problem) if use_grid else imp
    row.time_oracle = time.perf_counter() - t0
    row.oracle_method = oracle.method
    row.log_oracle, row.oracle_se = oracle.log_integral, oracle.uncertainty
    row.mean_err_vh_oracle = float(np.linalg.norm(mean_vh - imp.mean))
    row.mean_err_vb_oracle = float(np.linalg.norm(vb.mean - imp.mean))

    try:
        cert = certify(vh.log_bound, oracle, vh.alpha1)
        row.epsilon, row.certified_error, row.certified = (
            cert.epsilon, cert.distance_bound, cert.certified)
    except InconsistentInputs as exc:
        row.status, row.message = "inconsistent", str(exc)
    row.sandwich = sandwich_holds(row)
    return row


def run_experiment(config, *, on_row=None):
    """One row per (cell, seed) in sorted order; failures are recorded, not raised.

    Rows are appended to ``config.jsonl_path`` as they complete and the CSV
    is written at the end.
    """
    jobs = sorted((k, n, s) for k, n in config.cells for s in config.seeds)
    rows = []
    sink = open(config.jsonl_path, "w") if config.jsonl_path else None
    try:
        for kappa, n, seed in jobs:
            try:
                row = _run_row(kappa, n, seed, config)
            except Exception as exc:  # a failed row must not stop the sweep
                row = ReportRow(kappa, n, seed, status="error",
                                message=f"{type(exc).__name__}: {exc}")
            rows.append(row)
            if sink is not None:
                sink.write(row_to_json(row) + "\n")
                sink.flush()
            if on_row is not None:
                on_row(row)
    finally:
        if sink is not None:
            sink.close()
    if config.csv_path:
        with open(config.csv_path, "w", newline="") as fh:
            fh.write(rows_to_csv(rows))
    return rows


# ---------------------------------------------------------------- serialisation

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format(v, ".17g") if math.isfinite(v) else "null"
    return json.dumps(v)


def row_to_json(row, *, timing=True):
    items = asdict(row)
    return "{" + ",".join(f"{json.dumps(k)}:{_fmt(v)}" for k, v in items.items()
                          if timing or k not in TIMING_FIELDS) + "}"


def _coerce(name, value):
    kind = _FIELD_TYPES[name]
    if kind == "float":
        return math.nan if value in (None, "", "nan") else float(value)
    if kind == "int":
        return int(value)
    if kind == "bool":
        return value if isinstance(value, bool) else str(value).lower() == "true"
    return "" if value is None else str(value)


def row_from_dict(obj):
    return ReportRow(**{k: _coerce(k, v) for k, v in obj.items() if k in _FIELD_TYPES})


def read_jsonl(path):
    with open(path) as fh:
        return [row_from_dict(json.loads(line)) for line in fh if line.strip()]


def write_jsonl(rows, path, *, timing=True):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(row_to_json(row, timing=timing) + "\n")


def rows_to_csv(rows, *, timing=True):
    names = [n for n in ROW_FIELDS if timing or n not in TIMING_FIELDS]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in rows:
        out = []
        for name in names:
            v = getattr(row, name)
            if isinstance(v, bool):
                out.append("true" if v else "false")
            elif isinstance(v, float):
                out.append(format(v, ".17g"))
            else:
                out.append(v)
        writer.writerow(out)
    return buf.getvalue()


def read_csv(text):
    return [row_from_dict(rec) for rec in csv.DictReader(io.StringIO(text))]


# ---------------------------------------------------------------- text table

def _mean(values):
    vals = [v for v in values if np.isfinite(v)]
    return float(np.mean(vals)) if vals else math.nan


def render_table(rows):
    """Plain-text summary averaged over seeds: log partition function, then first-moment errors."""
    cells = sorted({(r.kappa, r.n) for r in rows})
    lines = ["log partition function",
             f"{'kappa':>6} {'n':>4} {'seeds':>5} {'oracle':>12} {'VB':>12} {'VH':>12} {'alpha1':>8}"]
    for k, n in cells:
        sel = [r for r in rows if (r.kappa, r.n) == (k, n)]
        lines.append(f"{k:>6g} {n:>4d} {len(sel):>5d} {_mean([r.log_oracle for r in sel]):>12.4f} "
                     f"{_mean([r.log_vb for r in sel]):>12.4f} {_mean([r.log_vh for r in sel]):>12.4f} "
                     f"{_mean([r.alpha1 for r in sel]):>8.4f}")
    lines += ["", "error in first moment",
              f"{'kappa':>6} {'n':>4} {'|VB-VH|':>12} {'|VH-IS|':>12} {'|VB-IS|':>12}"]
    for k, n in cells:
        sel = [r for r in rows if (r.kappa, r.n) == (k, n)]
        lines.append(f"{k:>6g} {n:>4d} {_mean([r.mean_err_vb_vh for r in sel]):>12.4f} "
                     f"{_mean([r.mean_err_vh_oracle for r in sel]):>12.4f} "
                     f"{_mean([r.mean_err_vb_oracle for r in sel]):>12.4f}")
    return "\n".join(lines) + "\n"
