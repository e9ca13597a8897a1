"""Truncated Gaussian integration problems.

A problem is the integral of ``prod_i f_i(t_i) * exp(-0.5 t'At + b't)`` over
R^n, where each ``f_i`` is a step at zero, the constant one, or a tabulated
non-negative function.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.linalg import lapack

SYMMETRY_RTOL = 1e-12


class InvalidProblem(ValueError):
    """A problem violates one of its invariants; ``reason`` names the first one."""

    def __init__(self, reason, detail=""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class SchemaError(ValueError):
    """An instance file does not follow the instance schema."""


@dataclass(frozen=True)
class StepAtZero:
    """f(t) = 1{t >= 0}."""

    support = (0.0, math.inf)

    def log_value(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0.0, 0.0, -np.inf)


@dataclass(frozen=True)
class ConstantOne:
    """f(t) = 1 (an untruncated dimension)."""

    support = (-math.inf, math.inf)

    def log_value(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Piecewise-linear interpolant of ``(x, f)`` samples, zero outside ``[x[0], x[-1]]``."""

    x: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        f = np.array(self.f, dtype=float)
        if x.ndim != 1 or x.shape != f.shape or x.size < 2:
            raise InvalidProblem("tabulated_shape", "x and f must be 1-D of equal length >= 2")
        if np.any(np.diff(x) <= 0):
            raise InvalidProblem("tabulated_not_increasing")
        if np.any(f < 0) or not np.any(f > 0) or not np.all(np.isfinite(f)):
            raise InvalidProblem("tabulated_values", "values must be finite, >= 0, not all zero")
        x.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "f", f)

    @property
    def support(self):
        return (float(self.x[0]), float(self.x[-1]))

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return np.interp(t, self.x, self.f, left=0.0, right=0.0)

    def log_value(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.value(t))

    def __eq__(self, other):
        return (isinstance(other, Tabulated) and np.array_equal(self.x, other.x)
                and np.array_equal(self.f, other.f))

    def __hash__(self):
        return hash((self.x.tobytes(), self.f.tobytes()))


FactorKind = Union[StepAtZero, ConstantOne, Tabulated]

STEP = StepAtZero()
ONE = ConstantOne()


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Problem:
    """Target integral defined by precision ``A``, linear term ``b`` and per-dimension factors.

    Construction only converts types; use :func:`validate` or
    :func:`check_problem` before handing a problem to the solvers.
    """

    A: np.ndarray
    b: np.ndarray
    factors: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(np.atleast_2d(self.A)))
        object.__setattr__(self, "b", _frozen(np.atleast_1d(self.b)))
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def all_step(self):
        return all(isinstance(f, StepAtZero) for f in self.factors)

    def log_gamma1(self, t):
        """Sum of log f_i(t_i) for points ``t`` of shape (..., n)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape[:-1])
        for i, f in enumerate(self.factors):
            out = out + f.log_value(t[..., i])
        return out

    def log_gamma2(self, t):
        t = np.asarray(t, dtype=float)
        return -0.5 * np.einsum("...i,ij,...j->...", t, self.A, t) + t @ self.b

    def __eq__(self, other):
        return (isinstance(other, Problem) and np.array_equal(self.A, other.A)
                and np.array_equal(self.b, other.b) and self.factors == other.factors)


@dataclass(frozen=True)
class ValidationReport:
    accepted: bool
    reason: str | None
    symmetry_defect: float
    min_eigenvalue: float
    dimension_ok: bool


def validate(problem):
    """Check a problem's invariants and report the first violation."""
    A, b = problem.A, problem.b
    dim_ok = (A.ndim == 2 and A.shape[0] == A.shape[1] and b.shape == (A.shape[0],)
              and len(problem.factors) == A.shape[0] and A.shape[0] >= 1)
    if not dim_ok:
        return ValidationReport(False, "dimension_mismatch", math.nan, math.nan, False)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        return ValidationReport(False, "non_finite", math.nan, math.nan, True)
    scale = max(float(np.max(np.abs(A))), np.finfo(float).tiny)
    defect = float(np.max(np.abs(A - A.T))) / scale
    if defect > SYMMETRY_RTOL:
        return ValidationReport(False, "asymmetric", defect, math.nan, True)
    sym = 0.5 * (A + A.T)
    lam = float(np.linalg.eigvalsh(sym)[0])
    _, info = lapack.dpotrf(sym, lower=1)
    if info != 0:
        return ValidationReport(False, "not_positive_definite", defect, lam, True)
    for f in problem.factors:
        if not isinstance(f, (StepAtZero, ConstantOne, Tabulated)):
            return ValidationReport(False, "unknown_factor", defect, lam, True)
    return ValidationReport(True, None, defect, lam, True)


def check_problem(problem):
    """Validate and return a copy with ``A`` symmetrised; raise :class:`InvalidProblem` otherwise."""
    report = validate(problem)
    if not report.accepted:
        raise InvalidProblem(report.reason)
    A = problem.A
    return Problem(0.5 * (A + A.T), problem.b, problem.factors, dict(problem.meta))


def make_problem(A, b=None, factors="step"):
    """Convenience constructor: ``factors`` may be ``"step"``, ``"one"`` or a sequence."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    b = np.zeros(n) if b is None else b
    if isinstance(factors, str):
        factors = [factor_from_json(factors)] * n
    return check_problem(Problem(A, b, factors))


# ---------------------------------------------------------------- instances

@dataclass(frozen=True)
class InstanceSpec:
    """Seeded instance ``A = kappa*I + v v'`` with ``v`` standard normal.

    ``truncated`` selects which dimensions get a step factor (all when None);
    ``rank_one=False`` drops the ``v v'`` term.
    """

    n: int
    kappa: float
    seed: int
    truncated: tuple | None = None
    rank_one: bool = True

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidProblem("n_not_positive")
        if not self.kappa > 0:
            raise InvalidProblem("kappa_not_positive")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidProblem("seed_out_of_range")
        if self.truncated is not None and len(self.truncated) != self.n:
            raise InvalidProblem("truncation_pattern_length")


def philox_uniforms(seed, size):
    """Uniform doubles in [0, 1) from Philox4x64-10 keyed by ``seed``, counter starting at 0.

    Each double is ``(word >> 11) * 2**-53`` of successive 64-bit outputs, which
    is how numpy's ``Generator.random`` converts raw bits.
    """
    bitgen = np.random.Philox(key=np.uint64(seed))
    return np.random.Generator(bitgen).random(size)


def box_muller(u):
    """Pairs of uniforms to standard normals; an odd trailing draw is discarded."""
    u = np.asarray(u, dtype=float)
    u1 = 1.0 - u[0::2]
    u2 = u[1::2]
    k = min(u1.size, u2.size)
    r = np.sqrt(-2.0 * np.log(u1[:k]))
    theta = 2.0 * math.pi * u2[:k]
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)]).ravel()


def standard_normals(seed, size):
    return box_muller(philox_uniforms(seed, 2 * ((size + 1) // 2)))[:size]


def generate_instance(spec):
    n = int(spec.n)
    v = standard_normals(int(spec.seed), n) if spec.rank_one else np.zeros(n)
    A = spec.kappa * np.eye(n) + np.outer(v, v)
    pattern = spec.truncated if spec.truncated is not None else (True,) * n
    factors = [STEP if tr else ONE for tr in pattern]
    meta = {"kappa": float(spec.kappa), "seed": int(spec.seed), "rng": "philox4x64-boxmuller"}
    return Problem(A, np.zeros(n), factors, meta)


# ---------------------------------------------------------------- file I/O

def factor_to_json(f):
    if isinstance(f, StepAtZero):
        return "step"
    if isinstance(f, ConstantOne):
        return "one"
    return {"tab": {"x": f.x.tolist(), "f": f.f.tolist()}}


def factor_from_json(obj):
    if obj == "step":
        return STEP
    if obj == "one":
        return ONE
    if isinstance(obj, dict) and "tab" in obj:
        tab = obj["tab"]
        return Tabulated(tab["x"], tab["f"])
    raise SchemaError(f"unknown factor {obj!r}")


def problem_to_json(problem):
    out = {
        "n": problem.n,
        "A": problem.A.tolist(),
        "b": problem.b.tolist(),
        "factors": [factor_to_json(f) for f in problem.factors],
    }
    if problem.meta:
        out["meta"] = problem.meta
    return out


def problem_from_json(obj):
    if not isinstance(obj, dict):
        raise SchemaError("instance must be a JSON object")
    for key in ("n", "A", "b", "factors"):
        if key not in obj:
            raise SchemaError(f"missing field '{key}'")
    n = obj["n"]
    if not isinstance(n, int) or n < 1:
        raise SchemaError("field 'n' must be a positive integer")
    A = obj["A"]
    if not isinstance(A, list) or len(A) != n:
        raise SchemaError(f"field 'A' must have {n} rows")
    for i, row in enumerate(A):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError(f"field 'A' row {i} must have {n} entries")
    if not isinstance(obj["b"], list) or len(obj["b"]) != n:
        raise SchemaError(f"field 'b' must have length {n}")
    if not isinstance(obj["factors"], list) or len(obj["factors"]) != n:
        raise SchemaError(f"field 'factors' must have length {n}")
    try:
        A = np.array(A, dtype=float)
        b = np.array(obj["b"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"non-numeric matrix entry: {exc}") from None
    factors = []
    for i, f in enumerate(obj["factors"]):
        try:
            factors.append(factor_from_json(f))
        except (KeyError, TypeError, InvalidProblem) as exc:
            raise SchemaError(f"field 'factors' entry {i}: {exc}") from None
    return Problem(A, b, factors, dict(obj.get("meta") or {}))


def save_problem(problem, path):
    Path(path).write_text(json.dumps(problem_to_json(problem), indent=1) + "\n")


def load_problem(path):
    """Read an instance file; schema problems raise :class:`SchemaError` with context."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return problem_from_json(obj)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from None
