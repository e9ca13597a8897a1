"""Holder bound for a product of K univariate factors.

For factors ``f_1..f_K`` on the real line, Gaussian-tilt pivots
``log Psi_k(t) = -c_k t^2/2 + d_k t`` and exponents with ``sum 1/alpha_k = 1``,

    log I* <= sum_k (1/alpha_k) log int (f_k/Psi_k)^alpha_k prod_j Psi_j dt.

Exponents come from a softmax over ``K-1`` free logits and a fixed zero for
the last factor; with ``K = 2`` the single logit is ``logit(1/alpha_1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax

from .optimize import lbfgs
from .problem import ONE, STEP, ConstantOne, StepAtZero, Tabulated
from .quadrature import NonFiniteIntegral, log_integrate
from .univariate import TiltedIntegralQuery, tilted_moments
from .vh import BoundResult, HolderOptions, inv_alpha1


@dataclass(frozen=True)
class GaussianFactor:
    """``f(t) = exp(-a t^2/2 + b t)``; ``a`` may be zero or negative when other factors compensate."""

    a: float
    b: float
    support = (-math.inf, math.inf)

    def log_value(self, t):
        t = np.asarray(t, dtype=float)
        return -0.5 * self.a * t * t + self.b * t


def _split(factor):
    """(base factor, quadratic coefficient, linear coefficient) of ``log f``."""
    if isinstance(factor, GaussianFactor):
        return ONE, factor.a, factor.b
    if isinstance(factor, (StepAtZero, ConstantOne, Tabulated)):
        return factor, 0.0, 0.0
    raise TypeError(f"unsupported factor {factor!r}")


@dataclass(frozen=True)
class KFactorSpec:
    factors: tuple
    c: np.ndarray          # pivot quadratic coefficients, one per factor
    d: np.ndarray          # pivot linear coefficients
    logits: np.ndarray     # K-1 exponent logits

    def __post_init__(self):
        k = len(self.factors)
        if k < 2:
            raise ValueError("need at least two factors")
        object.__setattr__(self, "factors", tuple(self.factors))
        for name, size in (("c", k), ("d", k), ("logits", k - 1)):
            v = np.array(getattr(self, name), dtype=float).reshape(-1)
            if v.size != size:
                raise ValueError(f"{name} must have {size} entries, got {v.size}")
            object.__setattr__(self, name, v)

    @property
    def K(self):
        return len(self.factors)

    @property
    def inv_alphas(self):
        return np.exp(self.log_inv_alphas)

    @property
    def log_inv_alphas(self):
        return log_softmax(np.append(self.logits, 0.0))

    @property
    def alphas(self):
        return np.exp(-self.log_inv_alphas)

    def to_vector(self):
        return np.concatenate([self.c, self.d, self.logits])

    def with_vector(self, x):
        k = self.K
        return KFactorSpec(self.factors, x[:k], x[k:2 * k], x[2 * k:])


def binary_spec(problem, params):
    """K=2 spec equal to the two-factor bound of a 1D problem at ``params``.

    The two-factor bound depends on the pivots only through
    ``Psi_1^(-1/alpha_2) Psi_2^(1/alpha_1)``; taking ``Psi_2 = 1`` and
    ``Psi_1 = Psi^(-alpha_2)`` reproduces it exactly.
    """
    if problem.n != 1:
        raise ValueError("binary_spec needs a one-dimensional problem")
    a2 = params.alpha2
    s = math.log(inv_alpha1(params.s)) - math.log1p(-inv_alpha1(params.s))
    factors = (problem.factors[0], GaussianFactor(float(problem.A[0, 0]), float(problem.b[0])))
    return KFactorSpec(factors, [-a2 * params.tau1[0], 0.0], [-a2 * params.tau2[0], 0.0], [s])


def _log_factor_integral(base, q, l, alpha):
    """log int base(t)^alpha exp(-q t^2/2 + l t) dt, ``+inf`` when it diverges."""
    if not isinstance(base, Tabulated) and not q > 0:
        return math.inf
    try:
        res = tilted_moments(TiltedIntegralQuery(q / alpha, l / alpha, alpha, base))
    except NonFiniteIntegral:
        return -math.inf
    return res.log_integral


def k_factor_terms(spec):
    """Per-factor ``log int (f_k/Psi_k)^alpha_k prod_j Psi_j``."""
    alphas = spec.alphas
    big_c, big_d = float(spec.c.sum()), float(spec.d.sum())
    out = np.empty(spec.K)
    for k, f in enumerate(spec.factors):
        base, a, b = _split(f)
        q = alphas[k] * (a - spec.c[k]) + big_c
        l = alphas[k] * (b - spec.d[k]) + big_d
        if not (np.isfinite(q) and np.isfinite(l)):
            return np.full(spec.K, math.inf)
        out[k] = _log_factor_integral(base, q, l, alphas[k])
    return out


def k_factor_log_bound(spec):
    terms = k_factor_terms(spec)
    if np.any(np.isposinf(terms)):
        return math.inf
    val = float(spec.inv_alphas @ terms)
    return val if not math.isnan(val) else math.inf


def k_factor_initialize(factors):
    """Each pivot takes half of its own factor's quadratic; uniform exponents."""
    k = len(factors)
    c = np.zeros(k)
    d = np.zeros(k)
    for i, f in enumerate(factors):
        _, a, b = _split(f)
        c[i], d[i] = 0.5 * a, 0.5 * b
    return KFactorSpec(factors, c, d, np.zeros(k - 1))


def _fd_gradient(func, x, f0, h):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        up, dn = func(x + e), func(x - e)
        if np.isfinite(up) and np.isfinite(dn):
            g[i] = (up - dn) / (2.0 * h)
        elif np.isfinite(up):
            g[i] = (up - f0) / h
        elif np.isfinite(dn):
            g[i] = (f0 - dn) / h
        else:
            g[i] = 0.0
    return g


class _Residuals:
    """Coordinates in which the integrability constraints are coordinate bounds.

    With ``w_k = q_k / alpha_k`` and ``m_k = l_k / alpha_k`` (``q_k, l_k`` the
    combined quadratic and linear coefficients of factor k's integral) one has
    ``sum w_k = sum a_k`` and ``sum m_k = sum b_k`` for every pivot choice, so
    the first ``K-1`` of each are free and ``w_k > 0`` is the whole
    constraint for step and constant factors. The pivots
    ``c = a - w, d = b - m`` (which sum to zero) realise them.
    """

    def __init__(self, factors):
        self.factors = tuple(factors)
        self.K = len(self.factors)
        split = [_split(f) for f in self.factors]
        self.bases = [s[0] for s in split]
        self.a = np.array([s[1] for s in split])
        self.b = np.array([s[2] for s in split])

    def from_spec(self, spec):
        inv = spec.inv_alphas
        w = self.a - spec.c + spec.c.sum() * inv
        m = self.b - spec.d + spec.d.sum() * inv
        k = self.K - 1
        return np.concatenate([w[:k], m[:k], spec.logits])

    def unpack(self, x):
        k = self.K - 1
        w = np.append(x[:k], self.a.sum() - x[:k].sum())
        m = np.append(x[k:2 * k], self.b.sum() - x[k:2 * k].sum())
        return w, m, x[2 * k:]

    def to_spec(self, x):
        w, m, logits = self.unpack(x)
        return KFactorSpec(self.factors, self.a - w, self.b - m, logits)

    def value(self, x):
        w, m, logits = self.unpack(x)
        log_inv = log_softmax(np.append(logits, 0.0))
        alphas = np.exp(-log_inv)
        total = 0.0
        for k, base in enumerate(self.bases):
            term = _log_factor_integral(base, alphas[k] * w[k], alphas[k] * m[k], alphas[k])
            if term == math.inf or math.isnan(term):
                return math.inf
            total += math.exp(log_inv[k]) * term
        return total

    def lower(self):
        k = self.K - 1
        lo = np.full(2 * k + k, -np.inf)
        for i in range(k):
            if not isinstance(self.bases[i], Tabulated):
                lo[i] = 0.0
        return lo


def k_factor_minimize(spec, options=None, fd_step=1e-6):
    """Minimise the K-factor bound over pivots and exponent logits (FD gradients).

    The search runs in residual-precision coordinates (see :class:`_Residuals`)
    so that faces of the feasible set are handled by the active-set rule of
    :func:`~vhbound.optimize.lbfgs`. The returned spec uses zero-sum pivots,
    which give the same bound as any other pivots with equal residuals.
    """
    options = options or HolderOptions()
    coords = _Residuals(spec.factors)

    def fg(x):
        f = coords.value(x)
        if not np.isfinite(f):
            return math.inf, None
        return f, _fd_gradient(coords.value, x, f, fd_step)

    x0 = coords.from_spec(spec)
    if not np.isfinite(coords.value(x0)):
        raise ValueError("initial K-factor spec has an infinite bound")
    res = lbfgs(fg, x0, max_iterations=options.max_iterations,
                gradient_tolerance=options.gradient_tolerance, memory=options.memory,
                lower=coords.lower())
    return BoundResult(res.fun, coords.to_spec(res.x), res.grad_norm, res.n_iter,
                       res.converged, res.status, res.history)


# ---------------------------------------------------------------- quadrature references

def _support(factors):
    lo, hi = -math.inf, math.inf
    for f in factors:
        a, b = f.support
        lo, hi = max(lo, a), min(hi, b)
    return lo, hi


def log_product_integral(factors):
    """log int prod_k f_k(t) dt for 1D factors, in closed form when possible."""
    q = l = 0.0
    rest = []
    for f in factors:
        base, a, b = _split(f)
        q += a
        l += b
        if not isinstance(base, ConstantOne):
            rest.append(base)
    tabs = [f for f in rest if isinstance(f, Tabulated)]
    if not tabs:
        base = STEP if rest else ONE
        return _log_factor_integral(base, q, l, 1.0)
    lo, hi = _support(factors)
    if not hi > lo:
        return -math.inf
    breaks = sorted({float(x) for f in tabs for x in f.x if lo < x < hi})

    def log_f(t):
        out = -0.5 * q * t * t + l * t
        for f in rest:
            out = out + f.log_value(t)
        return out

    return log_integrate(log_f, lo, hi, moments=False, rel_tol=1e-13,
                         breakpoints=tuple(breaks)).log_integral


def holder_log_bound_quadrature(log_gamma1, log_gamma2, log_psi, alpha1, lo, hi, breakpoints=()):
    """Two-factor bound ``||gamma1 Psi||_alpha1 ||gamma2/Psi||_alpha2`` for an arbitrary 1D pivot.

    All three callables return logs; the integrals run over ``[lo, hi]``.
    """
    alpha2 = alpha1 / (alpha1 - 1.0)

    def first(t):
        with np.errstate(invalid="ignore"):
            v = alpha1 * (log_gamma1(t) + log_psi(t))
        return np.where(np.isnan(v), -np.inf, v)

    def second(t):
        with np.errstate(invalid="ignore"):
            v = alpha2 * (log_gamma2(t) - log_psi(t))
        return np.where(np.isnan(v), -np.inf, v)

    kw = dict(moments=False, rel_tol=1e-13, breakpoints=tuple(breakpoints))
    i1 = log_integrate(first, lo, hi, **kw).log_integral
    i2 = log_integrate(second, lo, hi, **kw).log_integral
    return i1 / alpha1 + i2 / alpha2
