"""Mean-field variational Bayes lower bound with zero-truncated normal factors.

``q(t) = prod_i TN(mu_i, sigma_i^2)`` restricted to ``t_i >= 0`` and the
bound is

    L = -0.5 tr(A E[tt']) + b'E[t] + (n/2) log(2 pi e)
        + sum_i [ log(sigma_i Phi(mu_i/sigma_i)) - (mu_i/sigma_i) lambda_i / 2 ]

with ``lambda_i = phi(mu_i/sigma_i) / Phi(mu_i/sigma_i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .normal import truncnorm_entropy, truncnorm_moments
from .optimize import lbfgs


class UnsupportedFactor(TypeError):
    pass


@dataclass(frozen=True)
class MeanFieldParams:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        sigma = np.array(self.sigma, dtype=float).reshape(-1)
        if np.any(sigma <= 0):
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    def to_vector(self):
        return np.concatenate([self.mu, np.log(self.sigma)])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        n = x.size // 2
        return cls(x[:n], np.exp(x[n:]))


@dataclass(frozen=True)
class VbOptions:
    max_iterations: int = 500
    gradient_tolerance: float = 1e-7
    fd_step: float = 1e-6
    n_starts: int = 3
    seed: int = 0


@dataclass
class VbResult:
    lower_bound: float
    params: MeanFieldParams
    gradient_norm: float
    iterations: int
    converged: bool
    mean: np.ndarray
    second_moment: np.ndarray
    status: str = ""
    start: int = 0
    history: list = field(default_factory=list, repr=False)


def vb_moments(params):
    """E[t] and E[tt'] under the product of truncated normals."""
    m1, m2 = truncnorm_moments(params.mu, params.sigma)
    ett = np.outer(m1, m1)
    np.fill_diagonal(ett, m2)
    return m1, ett


def _check_factors(problem):
    if not problem.all_step:
        raise UnsupportedFactor("the truncated-normal mean field needs a step factor in every dimension")


def _coordinate_terms(mu, sigma):
    m1, m2 = truncnorm_moments(mu, sigma)
    return m1, m2, truncnorm_entropy(mu, sigma)


def _bound_from_terms(problem, m1, m2, ent):
    A = problem.A
    quad = float(m1 @ A @ m1) + float(np.diag(A) @ (m2 - m1 * m1))
    return -0.5 * quad + float(problem.b @ m1) + float(ent.sum())


def vb_bound(problem, params):
    _check_factors(problem)
    m1, m2, ent = _coordinate_terms(params.mu, params.sigma)
    return _bound_from_terms(problem, m1, m2, ent)


def vb_gradient(problem, params, fd_step=1e-6):
    """Gradient of L with respect to ``(mu, log sigma)``.

    L couples coordinates only through the quadratic form in E[t], so the
    chain rule needs the per-coordinate derivatives of (E[t_i], E[t_i^2],
    entropy_i); those come from central differences, all coordinates at once.
    """
    mu, log_sig = params.mu, np.log(params.sigma)
    m1, m2, _ = _coordinate_terms(mu, params.sigma)
    A = problem.A
    dA = np.diag(A)
    dL_dm1 = -(A @ m1) + dA * m1 + problem.b
    dL_dm2 = -0.5 * dA

    def partials(dmu, dls):
        up = _coordinate_terms(mu + dmu, np.exp(log_sig + dls))
        dn = _coordinate_terms(mu - dmu, np.exp(log_sig - dls))
        return [(u - d) / (2.0 * fd_step) for u, d in zip(up, dn)]

    h = fd_step
    dm1_mu, dm2_mu, dh_mu = partials(h, 0.0)
    dm1_ls, dm2_ls, dh_ls = partials(0.0, h)
    g_mu = dL_dm1 * dm1_mu + dL_dm2 * dm2_mu + dh_mu
    g_ls = dL_dm1 * dm1_ls + dL_dm2 * dm2_ls + dh_ls
    return np.concatenate([g_mu, g_ls])


def default_init(problem):
    """Untruncated mode clipped to >= 0.1, sigma_i = 1/sqrt(A_ii)."""
    mode = np.linalg.solve(problem.A, problem.b)
    return MeanFieldParams(np.maximum(mode, 0.1), 1.0 / np.sqrt(np.diag(problem.A)))


def _starts(problem, options):
    base = default_init(problem)
    yield base
    children = np.random.SeedSequence(options.seed).spawn(max(options.n_starts - 1, 0))
    for child in children:
        rng = np.random.Generator(np.random.Philox(child))
        mu = base.mu + base.sigma * rng.normal(size=problem.n)
        sigma = base.sigma * np.exp(0.5 * rng.normal(size=problem.n))
        yield MeanFieldParams(mu, sigma)


def vb_maximize(problem, options=None, init=None):
    """Maximise L from several starts; the best start wins (ties by start order)."""
    _check_factors(problem)
    options = options or VbOptions()

    def fg(x):
        p = MeanFieldParams.from_vector(x)
        val = vb_bound(problem, p)
        if not np.isfinite(val):
            return math.inf, None
        return -val, -vb_gradient(problem, p, options.fd_step)

    starts = [init] if init is not None else list(_starts(problem, options))[:max(options.n_starts, 1)]
    best = None
    for k, start in enumerate(starts):
        res = lbfgs(fg, start.to_vector(), max_iterations=options.max_iterations,
                    gradient_tolerance=options.gradient_tolerance)
        if best is None or -res.fun > best[0].lower_bound:
            params = MeanFieldParams.from_vector(res.x)
            m1, ett = vb_moments(params)
            out = VbResult(-res.fun, params, res.grad_norm, res.n_iter, res.converged,
                           m1, ett, res.status, k, [-v for v in res.history])
            best = (out,)
    return best[0]
