"""Limited-memory BFGS for extended-value objectives.

The objective may return ``+inf`` outside its domain; the line search treats
such points as failing the sufficient-decrease test and backs off, so iterates
never leave the domain and no projection is needed.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np


class LineSearchFailure(RuntimeError):
    pass


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    n_iter: int
    converged: bool
    status: str
    history: list = field(default_factory=list)

    @property
    def grad_norm(self):
        return float(np.max(np.abs(self.grad))) if self.grad.size else 0.0


def _cubic_min(a, fa, ga, b, fb, gb):
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    return b - (b - a) * (gb + d2 - d1) / denom


def strong_wolfe(fg, x, f0, g0, d, *, step=1.0, c1=1e-4, c2=0.9, max_evals=40):
    """Return ``(step, f, g)`` satisfying the strong Wolfe conditions along ``d``.

    Non-finite trial values count as too-large steps. Raises
    :class:`LineSearchFailure` when no acceptable point is found.
    """
    dg0 = float(g0 @ d)
    if not dg0 < 0:
        raise LineSearchFailure("not a descent direction")
    best = None
    evals = 0

    def trial(t):
        nonlocal evals, best
        evals += 1
        f, g = fg(x + t * d)
        if not np.isfinite(f):
            return math.inf, None, math.nan
        dg = float(g @ d)
        if f <= f0 + c1 * t * dg0 and (best is None or f < best[1]):
            best = (t, f, g)
        return f, g, dg

    def zoom(lo, f_lo, dg_lo, hi, f_hi, dg_hi):
        while evals < max_evals:
            width = hi - lo
            t = None
            if np.isfinite(f_hi) and np.isfinite(dg_hi):
                t = _cubic_min(lo, f_lo, dg_lo, hi, f_hi, dg_hi)
            lo_edge, hi_edge = sorted((lo + 0.1 * width, hi - 0.1 * width))
            if t is None or not lo_edge <= t <= hi_edge:
                t = lo + 0.5 * width
            f, g, dg = trial(t)
            if not np.isfinite(f) or f > f0 + c1 * t * dg0 or f >= f_lo:
                hi, f_hi, dg_hi = t, f, dg
            else:
                if abs(dg) <= -c2 * dg0:
                    return t, f, g
                if dg * (hi - lo) >= 0:
                    hi, f_hi, dg_hi = lo, f_lo, dg_lo
                lo, f_lo, dg_lo = t, f, dg
            if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
                break
        return None

    t_prev, f_prev, dg_prev = 0.0, f0, dg0
    t = step
    while evals < max_evals:
        f, g, dg = trial(t)
        if not np.isfinite(f) or f > f0 + c1 * t * dg0 or (t_prev > 0 and f >= f_prev):
            out = zoom(t_prev, f_prev, dg_prev, t, f, dg)
            break
        if abs(dg) <= -c2 * dg0:
            return t, f, g
        if dg >= 0:
            out = zoom(t, f, dg, t_prev, f_prev, dg_prev)
            break
        t_prev, f_prev, dg_prev = t, f, dg
        t = 2.0 * t
    else:
        out = None
    if out is not None:
        return out
    if best is not None and best[1] < f0:
        # sufficient decrease without curvature: still a valid descent step
        return best
    raise LineSearchFailure("no step satisfied the sufficient-decrease condition")


def lbfgs(fg, x0, *, max_iterations=500, gradient_tolerance=1e-7, memory=10,
          c1=1e-4, c2=0.9, lower=None, bound_tol=1e-10, callback=None):
    """Minimise ``fg`` (returning value and gradient) from a finite starting point.

    Accepted objective values are non-increasing. On line-search failure the
    best iterate is returned with ``converged=False`` and
    ``status="line_search_failure"``.

    ``lower`` marks open faces of the domain (e.g. a coordinate that must stay
    positive). A coordinate within ``bound_tol`` of its face whose gradient
    points outwards is held fixed for that iteration and left out of the
    convergence test; iterates themselves are never moved onto the face.
    """
    x = np.array(x0, dtype=float)
    f, g = fg(x)
    if not np.isfinite(f):
        raise ValueError("initial point is outside the objective's domain")
    lower = None if lower is None else np.asarray(lower, dtype=float)
    pairs = deque(maxlen=memory)
    history = [float(f)]
    status = "max_iterations"
    converged = False
    active_prev = None
    it = 0
    for it in range(1, max_iterations + 1):
        active = _active(x, g, lower, bound_tol)
        pg = np.where(active, 0.0, g)
        if np.max(np.abs(pg)) < gradient_tolerance:
            converged = True
            status = "gradient_tolerance"
            it -= 1
            break
        if active_prev is not None and np.any(active != active_prev):
            pairs.clear()
        active_prev = active
        d = np.where(active, 0.0, _two_loop(pg, pairs))
        if not float(g @ d) < 0:
            pairs.clear()
            d = -pg
        step = 1.0 if pairs else min(1.0, 1.0 / max(np.max(np.abs(pg)), 1e-300))
        step = _cap_step(x, d, lower, step)
        try:
            t, f_new, g_new = strong_wolfe(fg, x, f, g, d, step=step, c1=c1, c2=c2)
        except LineSearchFailure:
            if pairs:
                # curvature information is stale; restart from steepest descent
                pairs.clear()
                d = -pg
                step = _cap_step(x, d, lower, min(1.0, 1.0 / max(np.max(np.abs(pg)), 1e-300)))
                try:
                    t, f_new, g_new = strong_wolfe(fg, x, f, g, d, step=step, c1=c1, c2=c2)
                except LineSearchFailure:
                    status = "line_search_failure"
                    break
            else:
                status = "line_search_failure"
                break
        s = t * d
        y = np.where(active, 0.0, g_new - g)
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            pairs.append((s, y, 1.0 / sy))
        else:
            pairs.clear()
        x = x + s
        f, g = f_new, g_new
        history.append(float(f))
        if callback is not None:
            callback(x, f)
    else:
        pg = np.where(_active(x, g, lower, bound_tol), 0.0, g)
        if np.max(np.abs(pg)) < gradient_tolerance:
            converged, status = True, "gradient_tolerance"
    pg = np.where(_active(x, g, lower, bound_tol), 0.0, g)
    return OptimizeResult(x, float(f), np.asarray(pg, dtype=float), it, converged, status, history)


def _active(x, g, lower, tol):
    if lower is None:
        return np.zeros(x.shape, dtype=bool)
    return (x - lower <= tol) & (g > 0)


def _cap_step(x, d, lower, step):
    """Shrink the first trial so no coordinate crosses its lower face."""
    if lower is None:
        return step
    moving = (d < 0) & np.isfinite(lower)
    if not np.any(moving):
        return step
    t_max = float(np.min((x[moving] - lower[moving]) / -d[moving]))
    return min(step, 0.999 * t_max) if t_max > 0 else step


def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q
