"""Tilted univariate integrals ``I_h(a, b, alpha) = int (h(t) exp(-a t^2/2 + b t))^alpha dt``.

Every routine returns the log of the integral together with the first two raw
moments of the normalised tilted density, which is what the bound gradients
need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .normal import LOG_2PI, log_gauss_orthant, truncnorm_moments
from .problem import ConstantOne, StepAtZero, Tabulated
from .quadrature import NonFiniteIntegral, log_integrate

__all__ = [
    "TiltedIntegralQuery", "TiltedMoments", "NonFiniteIntegral", "OutOfHull",
    "integral_quadrature", "integral_closed_form", "tilted_moments",
    "closed_form_arrays", "build_cache", "InterpolationCache",
]

# log-density drop treated as the end of the support (exp(-72) ~ 5e-32)
_TAIL_DROP = 72.0


class OutOfHull(LookupError):
    pass


@dataclass(frozen=True)
class TiltedIntegralQuery:
    a: float
    b: float
    alpha: float
    factor: object

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not isinstance(self.factor, Tabulated) and not self.a > 0:
            raise ValueError(f"a must be positive for {type(self.factor).__name__}, got {self.a}")


@dataclass(frozen=True)
class TiltedMoments:
    log_integral: float
    mean: float
    second_moment: float

    @property
    def variance(self):
        return self.second_moment - self.mean ** 2


def _window(q):
    """Integration interval and breakpoints covering all but ~1e-30 of the mass."""
    lo_s, hi_s = q.factor.support
    aa = q.alpha * q.a
    if isinstance(q.factor, Tabulated):
        breaks = list(q.factor.x)
        if aa > 0:
            mu, sd = q.b / q.a, 1.0 / math.sqrt(aa)
            breaks += [mu + k * sd for k in range(-12, 13)]
        return lo_s, hi_s, tuple(breaks)
    mu = q.b / q.a
    sd = 1.0 / math.sqrt(aa)
    half = math.sqrt(2.0 * _TAIL_DROP) * sd
    if lo_s <= mu <= hi_s:
        return max(mu - half, lo_s), min(mu + half, hi_s), (mu,)
    # peak clipped to a support edge: walk inwards until the log drops by _TAIL_DROP
    edge = lo_s if mu < lo_s else hi_s
    slope = q.alpha * abs(q.a * edge - q.b)
    d = (-slope + math.sqrt(slope * slope + 2.0 * aa * _TAIL_DROP)) / aa
    return (edge, edge + d, ()) if mu < lo_s else (edge - d, edge, ())


def integral_quadrature(q, *, rel_tol=1e-11, abs_tol=1e-12):
    """Adaptive Simpson evaluation of the tilted integral and its moments."""
    lo, hi, breaks = _window(q)
    alpha, a, b = q.alpha, q.a, q.b
    factor = q.factor

    def log_f(t):
        return alpha * (factor.log_value(t) - 0.5 * a * t * t + b * t)

    res = log_integrate(log_f, lo, hi, rel_tol=rel_tol, abs_tol=abs_tol, breakpoints=breaks)
    return TiltedMoments(res.log_integral, res.mean, res.second_moment)


def closed_form_arrays(kind, a, b, alpha):
    """Vectorised closed forms for step or constant factors.

    Returns ``(log_integral, mean, second_moment)`` arrays.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aa = alpha * a
    mean = b / a
    sd = 1.0 / np.sqrt(aa)
    log_i = 0.5 * (LOG_2PI - np.log(aa)) + 0.5 * alpha * b * b / a
    if kind is StepAtZero or isinstance(kind, StepAtZero):
        log_i = log_gauss_orthant(alpha * b, aa)
        m1, m2 = truncnorm_moments(mean, sd)
        return log_i, m1, m2
    if kind is ConstantOne or isinstance(kind, ConstantOne):
        return log_i, mean, mean * mean + sd * sd
    raise TypeError(f"no closed form for {kind!r}")


def integral_closed_form(q):
    log_i, m1, m2 = closed_form_arrays(q.factor, q.a, q.b, q.alpha)
    return TiltedMoments(float(log_i), float(m1), float(m2))


def tilted_moments(q, cache=None):
    """Closed form when available, otherwise cache lookup, otherwise quadrature."""
    if isinstance(q.factor, (StepAtZero, ConstantOne)):
        return integral_closed_form(q)
    if cache is not None and cache.factor == q.factor:
        try:
            return cache.lookup(q)
        except OutOfHull:
            pass
    return integral_quadrature(q)


# ---------------------------------------------------------------- cache

class InterpolationCache:
    """Bilinear table of tilted integrals for a scale-invariant factor.

    Substituting ``t = v / sqrt(alpha a)`` gives
    ``log I = -0.5 log(alpha a) + 0.5 log(2 pi) + z^2/2 + R(alpha, z)`` with
    ``z = b sqrt(alpha / a)``, so only the residual ``R`` and the moments in
    ``v`` need tabulating. Nodes are filled by quadrature.
    """

    def __init__(self, factor, alphas, zs, residual, mean_v, second_v):
        self.factor = factor
        self.alphas = np.asarray(alphas, dtype=float)
        self.zs = np.asarray(zs, dtype=float)
        self.residual = residual
        self.mean_v = mean_v
        self.second_v = second_v

    def _weights(self, alpha, z):
        al, zs = self.alphas, self.zs
        if not (al[0] <= alpha <= al[-1] and zs[0] <= z <= zs[-1]):
            raise OutOfHull(f"(alpha={alpha}, z={z}) outside cache hull")
        i = min(int(np.searchsorted(al, alpha, side="right")) - 1, al.size - 2) if al.size > 1 else 0
        j = min(int(np.searchsorted(zs, z, side="right")) - 1, zs.size - 2)
        wa = 0.0 if al.size == 1 else (alpha - al[i]) / (al[i + 1] - al[i])
        wz = (z - zs[j]) / (zs[j + 1] - zs[j])
        return i, j, wa, wz

    def _interp(self, table, i, j, wa, wz):
        if self.alphas.size == 1:
            return (1 - wz) * table[0, j] + wz * table[0, j + 1]
        return ((1 - wa) * (1 - wz) * table[i, j] + (1 - wa) * wz * table[i, j + 1]
                + wa * (1 - wz) * table[i + 1, j] + wa * wz * table[i + 1, j + 1])

    def interpolate_residual(self, alpha, z):
        return float(self._interp(self.residual, *self._weights(alpha, z)))

    def lookup(self, q):
        if q.factor != self.factor:
            raise OutOfHull("factor does not match cache")
        aa = q.alpha * q.a
        z = q.b * math.sqrt(q.alpha / q.a)
        i, j, wa, wz = self._weights(q.alpha, z)
        r = self._interp(self.residual, i, j, wa, wz)
        mv = self._interp(self.mean_v, i, j, wa, wz)
        sv = self._interp(self.second_v, i, j, wa, wz)
        log_i = -0.5 * math.log(aa) + 0.5 * LOG_2PI + 0.5 * z * z + r
        scale = 1.0 / math.sqrt(aa)
        return TiltedMoments(float(log_i), float(mv * scale), float(sv * scale * scale))


def build_cache(factor, alphas, zs):
    """Tabulate the tilted integral of ``factor`` on an ``(alpha, z)`` grid."""
    if not isinstance(factor, (StepAtZero, ConstantOne)):
        raise TypeError("interpolation cache needs a scale-invariant factor (step or one)")
    alphas = np.sort(np.asarray(alphas, dtype=float))
    zs = np.sort(np.asarray(zs, dtype=float))
    shape = (alphas.size, zs.size)
    residual = np.empty(shape)
    mean_v = np.empty(shape)
    second_v = np.empty(shape)
    for i, alpha in enumerate(alphas):
        for j, z in enumerate(zs):
            # alpha * a = 1 puts the node directly in v-coordinates
            res = integral_quadrature(TiltedIntegralQuery(1.0 / alpha, z / alpha, alpha, factor))
            residual[i, j] = res.log_integral - 0.5 * LOG_2PI - 0.5 * z * z
            mean_v[i, j] = res.mean
            second_v[i, j] = res.second_moment
    return InterpolationCache(factor, alphas, zs, residual, mean_v, second_v)
