"""scikit-learn style wrappers around the two solvers.

``fit`` takes the precision matrix as ``X`` and the linear term as ``y``
(``b = 0`` when omitted), or a ready-made :class:`~vhbound.problem.Problem`
as ``X``. Fitted attributes end in an underscore.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .posterior import build_posteriors, posterior_moments
from .problem import Problem, check_problem, factor_from_json
from .vb import VbOptions, vb_maximize
from .vh import HolderOptions, minimize


def as_problem(X, y=None, factors="step"):
    """Coerce ``(A, b, factors)`` or a :class:`Problem` into a validated problem."""
    if isinstance(X, Problem):
        return check_problem(X)
    A = np.atleast_2d(np.asarray(X, dtype=float))
    n = A.shape[0]
    b = np.zeros(n) if y is None else np.asarray(y, dtype=float).reshape(-1)
    if isinstance(factors, str):
        factors = [factor_from_json(factors)] * n
    return check_problem(Problem(A, b, factors))


class VariationalHolder(BaseEstimator):
    """Upper bound on log I* with Gaussian-tilt pivots.

    Fitted attributes: ``log_bound_``, ``params_``, ``alpha1_``,
    ``converged_``, ``n_iter_``, ``posterior_`` and the means ``mean1_``,
    ``mean2_``, ``mean_`` (mixture).
    """

    def __init__(self, max_iter=500, grad_tol=1e-7, fd_step=1e-5, memory=10, factors="step"):
        self.max_iter = max_iter
        self.grad_tol = grad_tol
        self.fd_step = fd_step
        self.memory = memory
        self.factors = factors

    def fit(self, X, y=None):
        problem = as_problem(X, y, self.factors)
        options = HolderOptions(self.max_iter, self.grad_tol, self.fd_step, self.memory)
        res = minimize(problem, options=options)
        self.problem_ = problem
        self.result_ = res
        self.log_bound_ = res.log_bound
        self.params_ = res.params
        self.alpha1_ = res.params.alpha1
        self.converged_ = res.converged
        self.n_iter_ = res.iterations
        self.posterior_ = build_posteriors(problem, res.params)
        self.mean1_, self.mean2_, self.mean_ = posterior_moments(self.posterior_)
        return self

    def score(self, X=None, y=None):
        """Negated log bound, so that larger is better as sklearn expects."""
        check_is_fitted(self, "log_bound_")
        return -self.log_bound_


class MeanFieldVB(BaseEstimator):
    """Lower bound on log I* from a product of zero-truncated normals (all-step problems)."""

    def __init__(self, max_iter=500, grad_tol=1e-7, fd_step=1e-6, n_starts=3, random_state=0):
        self.max_iter = max_iter
        self.grad_tol = grad_tol
        self.fd_step = fd_step
        self.n_starts = n_starts
        self.random_state = random_state

    def fit(self, X, y=None):
        problem = as_problem(X, y, "step")
        options = VbOptions(self.max_iter, self.grad_tol, self.fd_step, self.n_starts,
                            int(self.random_state or 0))
        res = vb_maximize(problem, options)
        self.problem_ = problem
        self.result_ = res
        self.lower_bound_ = res.lower_bound
        self.params_ = res.params
        self.mean_ = res.mean
        self.second_moment_ = res.second_moment
        self.converged_ = res.converged
        self.n_iter_ = res.iterations
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "lower_bound_")
        return self.lower_bound_
