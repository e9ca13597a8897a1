"""Tractable approximations induced by an optimised bound, and their certificates.

Given pivot parameters, the two normalised bound factors are

* ``p1``: a product of tilted univariate densities proportional to
  ``(f_i(t_i) exp(-tau1_i t_i^2/2 + tau2_i t_i))^alpha1``;
* ``p2``: a Gaussian with precision ``alpha2 (A - diag tau1)`` and mean
  ``(A - diag tau1)^{-1} (b - tau2)``;

and ``p12`` mixes them with weights ``(1/alpha1, 1/alpha2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .normal import LOG_2PI
from .problem import ConstantOne, StepAtZero
from .vh import InfeasibleParams, bound_terms


@dataclass(frozen=True)
class PosteriorPair:
    problem: object
    params: object
    log_norm1: np.ndarray      # per-dimension log I_{f_i}(tau1_i, tau2_i, alpha1)
    mean1: np.ndarray
    second1: np.ndarray
    mean2: np.ndarray
    precision2: np.ndarray
    chol2: np.ndarray          # lower Cholesky factor of precision2
    log_bound: float

    @property
    def alpha1(self):
        return self.params.alpha1

    @property
    def alpha2(self):
        return self.params.alpha2

    @property
    def weights(self):
        return (1.0 / self.alpha1, 1.0 / self.alpha2)

    @property
    def cov2(self):
        return np.linalg.inv(self.precision2)

    def p1_location(self):
        """Per-dimension pre-truncation mean and sd of p1 (step and constant factors)."""
        tau1, tau2 = self.params.tau1, self.params.tau2
        return tau2 / tau1, 1.0 / np.sqrt(self.alpha1 * tau1)

    def log_p1(self, t):
        t = np.asarray(t, dtype=float)
        tau1, tau2 = self.params.tau1, self.params.tau2
        a1 = self.alpha1
        expo = a1 * (-0.5 * t * t * tau1 + t * tau2)
        out = expo.sum(axis=-1) - self.log_norm1.sum()
        return out + a1 * self.problem.log_gamma1(t)

    def log_p2(self, t):
        t = np.asarray(t, dtype=float)
        d = t - self.mean2
        w = d @ self.chol2
        n = self.problem.n
        logdet = 2.0 * np.log(np.diag(self.chol2)).sum()
        return -0.5 * np.einsum("...i,...i->...", w, w) - 0.5 * n * LOG_2PI + 0.5 * logdet


def build_posteriors(problem, params, cache=None):
    terms = bound_terms(problem, params, cache)
    if terms is None:
        raise InfeasibleParams("posteriors need feasible pivot parameters")
    prec2 = params.alpha2 * (problem.A - np.diag(params.tau1))
    chol2 = np.sqrt(params.alpha2) * terms.factor.L
    return PosteriorPair(problem, params, terms.log_i, terms.mean1, terms.second1,
                         terms.mean2, prec2, chol2, terms.value)


def posterior_moments(pair):
    """Means of p1, p2 and of their (1/alpha1, 1/alpha2) mixture."""
    w1, w2 = pair.weights
    return pair.mean1, pair.mean2, w1 * pair.mean1 + w2 * pair.mean2


# ---------------------------------------------------------------- certificates

class InconsistentInputs(ValueError):
    pass


@dataclass(frozen=True)
class Certificate:
    epsilon: float
    distance_bound: float
    certified: str            # "p1", "p2" or "both"
    raw_epsilon: float
    clipped: bool


def certify(log_bound, oracle, alpha1):
    """Distribution-error certificate from the relative gap of the bound.

    ``oracle`` is an :class:`~vhbound.oracles.OracleEstimate`. The relative gap
    ``eps = 1 - I*/bound`` gives ``||p_hat - p*||_1 <= sqrt(2 eps) + eps`` for
    p1 when ``alpha1 <= 2`` and for p2 when ``alpha1 >= 2``.
    """
    if log_bound < oracle.log_integral - oracle.uncertainty:
        raise InconsistentInputs(
            f"bound {log_bound!r} lies below the oracle {oracle.log_integral!r} "
            f"by more than its uncertainty {oracle.uncertainty!r}")
    raw = -math.expm1(oracle.log_integral - log_bound) + 0.0  # no signed zero
    clipped = not 0.0 <= raw <= 1.0
    if raw < 0.0:
        warnings.warn("bound below a noisy oracle estimate; reporting eps = 0", RuntimeWarning,
                      stacklevel=2)
    eps = 0.0 if raw <= 0.0 else min(raw, 1.0)
    if alpha1 == 2.0:
        which = "both"
    else:
        which = "p1" if alpha1 < 2.0 else "p2"
    return Certificate(eps, math.sqrt(2.0 * eps) + eps, which, raw, clipped)


# ---------------------------------------------------------------- distances on a grid

_BREAK_SDS = (-12.0, -8.0, -5.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 5.0, 8.0, 12.0)


def _star_box(pair, pad=12.0):
    """Box holding p* to ``pad`` sds, with breakpoints that resolve p1 and p2 inside it."""
    from .oracles import oracle_box

    lows, highs = oracle_box(pair.problem, pad)
    sd2 = np.sqrt(np.diag(pair.cov2))
    loc1, sd1 = pair.p1_location()
    breaks = []
    for i, f in enumerate(pair.problem.factors):
        bp = [p for p in f.support if np.isfinite(p)]
        bp += [pair.mean2[i] + k * sd2[i] for k in _BREAK_SDS]
        if isinstance(f, (StepAtZero, ConstantOne)):
            bp += [loc1[i] + k * sd1[i] for k in _BREAK_SDS]
        breaks.append(bp)
    return lows, highs, breaks


def l1_distances(pair, log_integral, *, panels=96, order=8):
    """L1 distances between the approximations and p* = gamma1 gamma2 / I*.

    Uses ``||p - q||_1 = |p| + |q| - 2 int min(p, q)``; the minimum is below
    p*, so integrating it over p*'s box suffices even when p1 or p2 spread
    far outside it. Also returns the distance from p1 and p2 to
    ``gamma1 gamma2 / bound`` (mass ``I*/bound``), which is at most
    ``sqrt(2 eps)`` for p1 when ``alpha1 <= 2``. L2 distances restricted to
    the box are included for information only.
    """
    from .quadrature import tensor_grid

    problem = pair.problem
    lows, highs, breaks = _star_box(pair)
    grid = tensor_grid(lows, highs, panels=panels, order=order, breakpoints=breaks)
    t = grid.points
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_target = problem.log_gamma1(t) + problem.log_gamma2(t)
        p_star = np.exp(log_target - log_integral)
        p1 = np.exp(pair.log_p1(t))
    p2 = np.exp(pair.log_p2(t))
    w1, w2 = pair.weights
    mix = w1 * p1 + w2 * p2
    ratio = math.exp(log_integral - pair.log_bound)
    scaled = ratio * p_star
    w = grid.weights

    def l1(p, q, mass_q=1.0):
        return max(1.0 + mass_q - 2.0 * float(np.sum(w * np.minimum(p, q))), 0.0)

    def l2(p, q):
        return float(np.sqrt(np.sum(w * (p - q) ** 2)))

    return {
        "p1": l1(p1, p_star),
        "p2": l1(p2, p_star),
        "mix": l1(mix, p_star),
        "p1_scaled": l1(p1, scaled, ratio),
        "p2_scaled": l1(p2, scaled, ratio),
        "p1_l2_box": l2(p1, p_star),
        "p2_l2_box": l2(p2, p_star),
        "mass_star": float(np.sum(w * p_star)),
    }
