"""Reference values of log I* for checking the bounds.

Two estimators:

* :func:`oracle_grid` integrates the last coordinate in closed form and the
  remaining (at most two) coordinates by nested adaptive Simpson; it is
  limited to ``n <= 3``.
* :func:`oracle_importance` samples from the product proposal ``p1`` of an
  optimised bound and averages the weights in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .normal import LOG_2PI, truncnorm_sample
from .problem import ConstantOne, StepAtZero, Tabulated
from .quadrature import NonFiniteIntegral, adaptive_simpson, tensor_grid
from .univariate import TiltedIntegralQuery, closed_form_arrays, integral_quadrature

GRID_MAX_DIM = 3
MIN_ESS = 50.0
CHUNK = 8192


@dataclass(frozen=True)
class OracleEstimate:
    log_integral: float
    uncertainty: float
    method: str                  # "grid" or "importance"
    size: int                    # integrand evaluations or sample count
    grid: object = None          # TensorGrid over the oracle box, when requested
    ess: float = math.nan
    mean: np.ndarray | None = None

    def __post_init__(self):
        if not self.uncertainty >= 0:
            raise ValueError("uncertainty must be non-negative")


class DimensionTooLarge(ValueError):
    pass


class EffectiveSampleSizeTooLow(ArithmeticError):
    def __init__(self, estimate):
        super().__init__(f"effective sample size {estimate.ess:.1f} below {MIN_ESS:g}")
        self.estimate = estimate


class UnsupportedProposal(TypeError):
    pass


# ---------------------------------------------------------------- grid oracle

def oracle_box(problem, pad=12.0):
    """Per-axis ``mean +- pad sd`` of the untruncated Gaussian clipped to each support."""
    cov = np.linalg.inv(problem.A)
    mu = cov @ problem.b
    sd = np.sqrt(np.diag(cov))
    lows, highs = [], []
    for i, f in enumerate(problem.factors):
        lo_s, hi_s = f.support
        lo, hi = max(mu[i] - pad * sd[i], lo_s), min(mu[i] + pad * sd[i], hi_s)
        if not hi > lo:
            raise NonFiniteIntegral(f"axis {i}: support misses the Gaussian's mass")
        lows.append(lo)
        highs.append(hi)
    return np.array(lows), np.array(highs)


def _last_axis_log(problem, prefix):
    """log of the integral over the last coordinate, for each row of ``prefix``."""
    n = problem.n
    l = n - 1
    A, b = problem.A, problem.b
    f = problem.factors[l]
    lin = b[l] - prefix @ A[l, :l]
    if isinstance(f, (StepAtZero, ConstantOne)):
        log_i, _, _ = closed_form_arrays(f, np.full(lin.shape, A[l, l]), lin, 1.0)
        return np.asarray(log_i, dtype=float)
    out = np.empty(lin.shape)
    for k, bk in enumerate(lin):
        try:
            out[k] = integral_quadrature(TiltedIntegralQuery(A[l, l], bk, 1.0, f),
                                         rel_tol=1e-13).log_integral
        except NonFiniteIntegral:
            out[k] = -np.inf
    return out


def _reduced_log(problem, prefix):
    """Log integrand on the first ``n-1`` coordinates with the last one integrated out."""
    m = problem.n - 1
    A, b = problem.A[:m, :m], problem.b[:m]
    with np.errstate(divide="ignore"):
        lg1 = np.zeros(prefix.shape[0])
        for i in range(m):
            lg1 = lg1 + problem.factors[i].log_value(prefix[:, i])
    quad = -0.5 * np.einsum("ki,ij,kj->k", prefix, A, prefix) + prefix @ b
    return lg1 + quad + _last_axis_log(problem, prefix)


def _breaks(problem, i):
    f = problem.factors[i]
    if isinstance(f, Tabulated):
        return tuple(f.x)
    return (0.0,)


def _nested(problem, lows, highs, shift, rel_tol):
    """Integral of ``exp(reduced_log - shift)`` over the box of the first n-1 axes."""
    m = problem.n - 1
    evals = 0
    if m == 0:
        return float(np.exp(_last_axis_log(problem, np.zeros((1, 0)))[0] - shift)), 1

    def leaf(prefix):
        nonlocal evals
        evals += prefix.shape[0]
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.exp(_reduced_log(problem, prefix) - shift)
        return np.where(np.isfinite(w), w, 0.0)

    if m == 1:
        res = adaptive_simpson(lambda x: leaf(x[:, None]), lows[0], highs[0],
                               rel_tol=rel_tol, abs_tol=0.0, breakpoints=_breaks(problem, 0))
        return float(res.value), evals

    def outer(x0):
        vals = np.empty(x0.size)
        for k, t0 in enumerate(x0):
            inner = adaptive_simpson(
                lambda x1: leaf(np.column_stack([np.full(x1.size, t0), x1])),
                lows[1], highs[1], rel_tol=0.1 * rel_tol, abs_tol=1e-300,
                breakpoints=_breaks(problem, 1))
            vals[k] = inner.value
        return vals

    res = adaptive_simpson(outer, lows[0], highs[0], rel_tol=rel_tol, abs_tol=0.0,
                           breakpoints=_breaks(problem, 0))
    return float(res.value), evals


def oracle_grid(problem, rel_tol=1e-10, *, with_grid=False, grid_panels=96, grid_order=8):
    """Nested adaptive quadrature of ``gamma1 gamma2`` for ``n <= 3``.

    The value is computed at ``rel_tol`` and again at ``rel_tol / 32``; the
    refined value is returned and the uncertainty is four times the change
    (never less than ``rel_tol``).
    """
    n = problem.n
    if n > GRID_MAX_DIM:
        raise DimensionTooLarge(f"grid oracle supports n <= {GRID_MAX_DIM}, got {n}")
    lows, highs = oracle_box(problem)
    # peak of the untruncated Gaussian keeps the scaled integrand O(1)
    shift = 0.5 * float(problem.b @ np.linalg.solve(problem.A, problem.b))
    coarse, e1 = _nested(problem, lows[:-1], highs[:-1], shift, rel_tol)
    fine, e2 = _nested(problem, lows[:-1], highs[:-1], shift, rel_tol / 32.0)
    if not (fine > 0 and np.isfinite(fine)):
        raise NonFiniteIntegral("grid integral is not positive and finite")
    log_i = shift + math.log(fine)
    delta = abs(math.log(coarse) - math.log(fine)) if coarse > 0 else math.inf
    grid = None
    if with_grid:
        grid = tensor_grid(lows, highs, panels=grid_panels, order=grid_order,
                           breakpoints=[_breaks(problem, i) for i in range(n)])
    return OracleEstimate(log_i, max(4.0 * delta, rel_tol), "grid", e1 + e2, grid)


def gaussian_log_integral(A, b):
    """Closed-form log of the untruncated integral ``int exp(-t'At/2 + b't) dt``."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    sign, logdet = np.linalg.slogdet(A)
    if sign <= 0:
        raise np.linalg.LinAlgError("A is not positive definite")
    return 0.5 * A.shape[0] * LOG_2PI - 0.5 * logdet + 0.5 * float(b @ np.linalg.solve(A, b))


# ---------------------------------------------------------------- importance sampling

def _draw_p1(pair, u):
    loc, sd = pair.p1_location()
    t = np.empty_like(u)
    for i, f in enumerate(pair.problem.factors):
        if isinstance(f, StepAtZero):
            t[:, i] = truncnorm_sample(loc[i], sd[i], u[:, i])
        elif isinstance(f, ConstantOne):
            t[:, i] = loc[i] + sd[i] * ndtri(u[:, i])
        else:
            raise UnsupportedProposal(f"cannot sample the tilted factor {type(f).__name__}")
    return t


def oracle_importance(problem, pair, samples=100_000, seed=0, *, chunk=CHUNK, min_ess=MIN_ESS):
    """Importance-sampling estimate of log I* with ``p1`` as proposal.

    Samples are drawn in fixed-size chunks, each from its own Philox stream
    spawned from ``seed``, so the estimate depends only on ``(samples, seed,
    chunk)``. The uncertainty is the delta-method standard error of the log
    of the mean weight. Raises :class:`EffectiveSampleSizeTooLow` (carrying
    the estimate) when the effective sample size is below ``min_ess``.
    """
    samples = int(samples)
    if samples < 2:
        raise ValueError("need at least two samples")
    n_chunks = -(-samples // chunk)
    streams = np.random.SeedSequence(int(seed)).spawn(n_chunks)
    top = -math.inf
    s0 = s1 = 0.0
    st = np.zeros(problem.n)
    for c, ss in enumerate(streams):
        m = min(chunk, samples - c * chunk)
        rng = np.random.Generator(np.random.Philox(ss))
        u = rng.random((m, problem.n))
        # Generator.random lies in [0, 1); keep u off zero for the log
        u = np.maximum(u, np.finfo(float).tiny)
        t = _draw_p1(pair, u)
        with np.errstate(divide="ignore", invalid="ignore"):
            lw = problem.log_gamma1(t) + problem.log_gamma2(t) - pair.log_p1(t)
        lw = np.where(np.isnan(lw), -np.inf, lw)
        cmax = float(np.max(lw))
        if cmax > top:
            if np.isfinite(top):
                r = math.exp(top - cmax)
                s0, s1, st = s0 * r, s1 * r * r, st * r
            top = cmax
        if not np.isfinite(top):
            continue
        w = np.exp(lw - top)
        s0 += float(w.sum())
        s1 += float(w @ w)
        st += w @ t
    if not (np.isfinite(top) and s0 > 0):
        raise NonFiniteIntegral("all importance weights vanish")
    log_i = top + math.log(s0 / samples)
    mean_w = s0 / samples
    var_w = max(s1 / samples - mean_w * mean_w, 0.0)
    se = math.sqrt(var_w * samples / (samples - 1)) / (math.sqrt(samples) * mean_w)
    ess = s0 * s0 / s1
    est = OracleEstimate(log_i, se, "importance", samples, None, ess, st / s0)
    if ess < min_ess:
        raise EffectiveSampleSizeTooLow(est)
    return est
