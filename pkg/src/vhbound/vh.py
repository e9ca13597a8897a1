"""Variational Holder upper bound for truncated Gaussian integrals.

The pivot is ``Psi(t) = exp(-0.5 t' diag(tau1) t + tau2' t)`` and the Holder
exponent is parameterised by ``s = logit(1/alpha1)``. The log of the bound is

    (1/alpha1) sum_i log I_{f_i}(tau1_i, tau2_i, alpha1)
      + (1/alpha2) [ (n/2) log(2 pi) + J(alpha2 (A - diag tau1), alpha2 (b - tau2)) ]

and is ``+inf`` whenever ``tau1`` leaves the feasible set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import NotPositiveDefinite, factorize, min_eigenvalue
from .normal import LOG_2PI
from .optimize import lbfgs
from .problem import ConstantOne, StepAtZero
from .univariate import TiltedIntegralQuery, closed_form_arrays, tilted_moments

SIGMOID_CLAMP = 1e-9


def inv_alpha1(s):
    """1/alpha1 = sigmoid(s), clamped away from 0 and 1."""
    if s >= 0:
        v = 1.0 / (1.0 + math.exp(-s))
    else:
        e = math.exp(s)
        v = e / (1.0 + e)
    return min(max(v, SIGMOID_CLAMP), 1.0 - SIGMOID_CLAMP)


@dataclass(frozen=True)
class PivotParams:
    tau1: np.ndarray
    tau2: np.ndarray
    s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tau1", np.array(self.tau1, dtype=float).reshape(-1))
        object.__setattr__(self, "tau2", np.array(self.tau2, dtype=float).reshape(-1))
        object.__setattr__(self, "s", float(self.s))

    @property
    def alpha1(self):
        return 1.0 / inv_alpha1(self.s)

    @property
    def alpha2(self):
        return 1.0 / (1.0 - inv_alpha1(self.s))

    @classmethod
    def from_alpha(cls, tau1, tau2, alpha1):
        return cls(tau1, tau2, math.log(1.0 / (alpha1 - 1.0)))

    def to_vector(self):
        return np.concatenate([self.tau1, self.tau2, [self.s]])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        n = (x.size - 1) // 2
        return cls(x[:n], x[n:2 * n], x[-1])


@dataclass(frozen=True)
class HolderOptions:
    max_iterations: int = 500
    gradient_tolerance: float = 1e-7
    fd_step: float = 1e-5
    memory: int = 10


@dataclass
class BoundResult:
    log_bound: float
    params: PivotParams
    gradient_norm: float
    iterations: int
    converged: bool
    status: str = ""
    history: list = field(default_factory=list, repr=False)

    @property
    def alpha1(self):
        return self.params.alpha1


class InfeasibleParams(ValueError):
    pass


@dataclass(frozen=True)
class BoundTerms:
    """Pieces of the bound shared by the value, the gradient and the posteriors."""

    log_i: np.ndarray          # per-dimension log tilted integrals
    mean1: np.ndarray          # E_{p1}[t_i]
    second1: np.ndarray        # E_{p1}[t_i^2]
    factor: object             # Cholesky of A - diag(tau1)
    mean2: np.ndarray          # (A - diag tau1)^{-1} (b - tau2)
    first: float
    second: float

    @property
    def value(self):
        return self.first + self.second


def tilted_terms(problem, tau1, tau2, alpha1, cache=None):
    """Per-dimension ``(log I, E[t], E[t^2])`` of the first bound factor."""
    n = problem.n
    log_i = np.empty(n)
    m1 = np.empty(n)
    m2 = np.empty(n)
    for kind in (StepAtZero, ConstantOne):
        idx = [i for i, f in enumerate(problem.factors) if isinstance(f, kind)]
        if idx:
            li, a1, a2 = closed_form_arrays(kind, tau1[idx], tau2[idx], alpha1)
            log_i[idx], m1[idx], m2[idx] = li, a1, a2
    for i, f in enumerate(problem.factors):
        if not isinstance(f, (StepAtZero, ConstantOne)):
            res = tilted_moments(TiltedIntegralQuery(tau1[i], tau2[i], alpha1, f), cache)
            log_i[i], m1[i], m2[i] = res.log_integral, res.mean, res.second_moment
    return log_i, m1, m2


def bound_terms(problem, params, cache=None):
    """Evaluate the bound's components, or return None when ``params`` is infeasible."""
    tau1, tau2 = params.tau1, params.tau2
    if not (np.all(tau1 > 0) and np.all(np.isfinite(tau1)) and np.all(np.isfinite(tau2))):
        return None
    try:
        fac = factorize(problem.A - np.diag(tau1))
    except NotPositiveDefinite:
        return None
    a1, a2 = params.alpha1, params.alpha2
    log_i, m1, m2 = tilted_terms(problem, tau1, tau2, a1, cache)
    v = problem.b - tau2
    mean2 = fac.solve(v)
    n = problem.n
    # J(a2 M, a2 v) = -0.5 (n log a2 + log|M|) + 0.5 a2 v' M^{-1} v
    j = -0.5 * (n * math.log(a2) + fac.logdet) + 0.5 * a2 * float(v @ mean2)
    first = float(log_i.sum()) / a1
    second = (0.5 * n * LOG_2PI + j) / a2
    return BoundTerms(log_i, m1, m2, fac, mean2, first, second)


def log_bound(problem, params, cache=None):
    """Log of the Holder upper bound; ``+inf`` outside the feasible set."""
    terms = bound_terms(problem, params, cache)
    if terms is None:
        return math.inf
    val = terms.value
    return val if np.isfinite(val) else math.inf


def gradient(problem, params, fd_step=1e-5, cache=None, terms=None):
    """Gradient with respect to ``(tau1, tau2, s)``.

    The tau block is moment matching between the two normalised factors; the
    exponent coordinate uses a central difference of :func:`log_bound`.
    """
    if terms is None:
        terms = bound_terms(problem, params, cache)
    if terms is None:
        raise InfeasibleParams("gradient undefined at an infeasible point")
    var2 = terms.factor.inverse_diagonal() / params.alpha2
    second2 = terms.mean2 ** 2 + var2
    g_tau1 = 0.5 * (second2 - terms.second1)
    g_tau2 = terms.mean1 - terms.mean2
    up = PivotParams(params.tau1, params.tau2, params.s + fd_step)
    dn = PivotParams(params.tau1, params.tau2, params.s - fd_step)
    g_s = (log_bound(problem, up, cache) - log_bound(problem, dn, cache)) / (2.0 * fd_step)
    return np.concatenate([g_tau1, g_tau2, [g_s]])


def initialize(problem):
    """tau1 at half the smallest eigenvalue of A, tau2 = b/2, alpha1 = alpha2 = 2."""
    lam = min_eigenvalue(problem.A)
    return PivotParams(np.full(problem.n, 0.5 * lam), 0.5 * problem.b, 0.0)


def minimize(problem, init=None, options=None, cache=None):
    """Minimise the log bound jointly over pivot parameters and exponent logit."""
    options = options or HolderOptions()
    params0 = initialize(problem) if init is None else init

    def fg(x):
        p = PivotParams.from_vector(x)
        terms = bound_terms(problem, p, cache)
        if terms is None or not np.isfinite(terms.value):
            return math.inf, None
        return terms.value, gradient(problem, p, options.fd_step, cache, terms)

    n = problem.n
    lower = np.concatenate([np.zeros(n), np.full(n + 1, -np.inf)])
    res = lbfgs(fg, params0.to_vector(), max_iterations=options.max_iterations,
                gradient_tolerance=options.gradient_tolerance, memory=options.memory,
                lower=lower)
    params = PivotParams.from_vector(res.x)
    return BoundResult(res.fun, params, res.grad_norm, res.n_iter, res.converged,
                       res.status, res.history)
