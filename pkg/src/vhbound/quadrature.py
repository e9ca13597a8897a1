"""Adaptive Simpson quadrature and log-space integration helpers.

The integrator works breadth-first: all unresolved panels are refined in one
vectorised call to the integrand, so the integrand must accept a 1-D array of
abscissae and return either an array of the same length or an ``(m, len(x))``
array when several integrals share the same nodes (e.g. moments).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NonFiniteIntegral(ArithmeticError):
    """The integrand underflows (or is not finite) on the whole support."""


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    n_evals: int
    max_depth_hit: bool


def adaptive_simpson(func, lo, hi, *, abs_tol=1e-12, rel_tol=1e-10,
                     initial_panels=16, max_depth=40, breakpoints=()):
    """Integrate ``func`` over ``[lo, hi]`` with adaptive Simpson refinement.

    Panels are accepted when ``|S(left) + S(right) - S(whole)| <= 15 * tol``
    with the tolerance shared across panels in proportion to their width, and
    the accepted value carries the usual Richardson correction.

    Returns a :class:`QuadResult`; ``value`` has shape ``(m,)`` for vector
    integrands and ``()`` for scalar ones.
    """
    lo = float(lo)
    hi = float(hi)
    if not hi > lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    edges = np.linspace(lo, hi, int(initial_panels) + 1)
    extra = [float(p) for p in breakpoints if lo < p < hi]
    if extra:
        edges = np.unique(np.concatenate([edges, extra]))

    def evaluate(x):
        y = np.asarray(func(x), dtype=float)
        return y.reshape(-1, x.size)

    a = edges[:-1]
    b = edges[1:]
    m = 0.5 * (a + b)
    y0 = np.asarray(func(edges), dtype=float)
    scalar = y0.ndim == 1
    f_edges = y0.reshape(-1, edges.size)
    fa = f_edges[:, :-1]
    fb = f_edges[:, 1:]
    fm = evaluate(m)
    n_evals = edges.size + m.size
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    rough = whole.sum(axis=1)
    tol = np.maximum(abs_tol, rel_tol * np.abs(rough))[:, None]
    width = hi - lo

    total = np.zeros(f_edges.shape[0])
    err_total = np.zeros(f_edges.shape[0])
    depth = 0
    depth_hit = False
    while a.size:
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        both = evaluate(np.concatenate([lm, rm]))
        n_evals += 2 * a.size
        flm = both[:, :a.size]
        frm = both[:, a.size:]
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        budget = 15.0 * tol * ((b - a) / width)
        ok = np.all(np.abs(delta) <= budget, axis=0)
        depth += 1
        if depth >= max_depth:
            depth_hit = bool(np.any(~ok))
            ok[:] = True
        if np.any(ok):
            total += (left[:, ok] + right[:, ok] + delta[:, ok] / 15.0).sum(axis=1)
            err_total += np.abs(delta[:, ok]).sum(axis=1) / 15.0
        keep = ~ok
        if not np.any(keep):
            break
        a_k, m_k, b_k = a[keep], m[keep], b[keep]
        a = np.concatenate([a_k, m_k])
        b = np.concatenate([m_k, b_k])
        m = 0.5 * (a + b)
        fa = np.concatenate([fa[:, keep], fm[:, keep]], axis=1)
        fb = np.concatenate([fm[:, keep], fb[:, keep]], axis=1)
        fm = np.concatenate([flm[:, keep], frm[:, keep]], axis=1)
        whole = np.concatenate([left[:, keep], right[:, keep]], axis=1)

    if scalar:
        return QuadResult(total[0], err_total[0], n_evals, depth_hit)
    return QuadResult(total, err_total, n_evals, depth_hit)


@dataclass(frozen=True)
class LogMoments:
    """Log of an integral plus the first two raw moments of the normalised integrand."""

    log_integral: float
    mean: float
    second_moment: float


def log_integrate(log_f, lo, hi, *, moments=True, abs_tol=1e-12, rel_tol=1e-11,
                  initial_panels=16, breakpoints=(), max_depth=40):
    """Integrate ``exp(log_f)`` over ``[lo, hi]`` working with a max-shift.

    The integrand is rescaled by its largest sampled value so the quantity the
    Simpson rule sees peaks near one; the shift is added back to the log at
    the end. Moments are accumulated about the interval midpoint to limit
    cancellation in the second moment.
    """
    probe = np.linspace(lo, hi, 513)
    if breakpoints:
        probe = np.concatenate([probe, [p for p in breakpoints if lo <= p <= hi]])
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lp = np.asarray(log_f(probe), dtype=float)
    finite = lp[np.isfinite(lp)]
    if finite.size == 0:
        raise NonFiniteIntegral(f"integrand underflows everywhere on [{lo}, {hi}]")
    shift = float(finite.max())
    center = 0.5 * (lo + hi)

    def integrand(x):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            w = np.exp(np.asarray(log_f(x), dtype=float) - shift)
        w = np.where(np.isfinite(w), w, 0.0)
        if not moments:
            return w
        d = x - center
        return np.stack([w, w * d, w * d * d])

    res = adaptive_simpson(integrand, lo, hi, abs_tol=abs_tol, rel_tol=rel_tol,
                           initial_panels=initial_panels, breakpoints=breakpoints,
                           max_depth=max_depth)
    z = res.value[0] if moments else res.value
    if not (z > 0.0 and np.isfinite(z)):
        raise NonFiniteIntegral(f"integral on [{lo}, {hi}] is not positive and finite")
    log_z = shift + float(np.log(z))
    if not moments:
        return LogMoments(log_z, np.nan, np.nan)
    d1 = res.value[1] / z
    d2 = res.value[2] / z
    mean = center + d1
    # raw second moment from the centred one
    second = d2 + 2.0 * center * d1 + center * center
    return LogMoments(log_z, float(mean), float(max(second, mean * mean)))


@dataclass(frozen=True)
class TensorGrid:
    """Tensor-product Gauss-Legendre rule: ``points`` is ``(N, d)``, ``weights`` is ``(N,)``."""

    points: np.ndarray
    weights: np.ndarray
    axes: tuple


def gauss_legendre_axis(lo, hi, panels=64, order=8, breakpoints=()):
    edges = np.linspace(lo, hi, panels + 1)
    extra = [p for p in breakpoints if lo < p < hi]
    if extra:
        edges = np.unique(np.concatenate([edges, extra]))
    x, w = np.polynomial.legendre.leggauss(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w[None, :]).ravel()
    return nodes, weights


def tensor_grid(lows, highs, *, panels=64, order=8, breakpoints=None):
    """Build a tensor Gauss-Legendre grid over a box, splitting panels at breakpoints."""
    axes = []
    for i, (lo, hi) in enumerate(zip(lows, highs)):
        bp = () if breakpoints is None else breakpoints[i]
        axes.append(gauss_legendre_axis(lo, hi, panels, order, bp))
    mesh = np.meshgrid(*[ax[0] for ax in axes], indexing="ij")
    wmesh = np.meshgrid(*[ax[1] for ax in axes], indexing="ij")
    points = np.stack([g.ravel() for g in mesh], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wmesh], axis=1), axis=1)
    return TensorGrid(points, weights, tuple(axes))
