"""Dense SPD algebra: Cholesky, log-determinants and the Gaussian exponent J(M, v)."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, lapack


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Cholesky broke down; ``pivot`` is the zero-based index of the failing column."""

    def __init__(self, pivot):
        self.pivot = pivot
        super().__init__(f"matrix is not positive definite (pivot {pivot})")


@dataclass(frozen=True)
class SpdFactorization:
    L: np.ndarray
    logdet: float

    def solve(self, v):
        return cho_solve((self.L, True), v)

    def inverse_diagonal(self):
        Linv = lapack.dtrtri(self.L, lower=1)[0]
        return np.einsum("ij,ij->j", Linv, Linv)


def factorize(M):
    """Lower Cholesky factor of a symmetric matrix or :class:`NotPositiveDefinite`."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    L, info = lapack.dpotrf(M, lower=1, clean=1)
    if info != 0:
        raise NotPositiveDefinite(int(info) - 1 if info > 0 else 0)
    d = np.diag(L)
    if not np.all(np.isfinite(d)) or np.any(d <= 0.0):
        raise NotPositiveDefinite(int(np.argmin(d)))
    return SpdFactorization(L, float(2.0 * np.log(d).sum()))


def j_function(M, v, factor=None):
    """-0.5 log|M| + 0.5 v' M^{-1} v, through a Cholesky solve."""
    fac = factorize(M) if factor is None else factor
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = lapack.dtrtrs(fac.L, v, lower=1)[0]
    return -0.5 * fac.logdet + 0.5 * float(w @ w)


def min_eigenvalue(A):
    return float(np.linalg.eigvalsh(np.atleast_2d(A))[0])


def is_feasible(problem, tau1):
    """True iff every tau1_i > 0 and A - diag(tau1) is positive definite."""
    tau1 = np.asarray(tau1, dtype=float)
    if tau1.shape != (problem.n,) or not np.all(tau1 > 0.0) or not np.all(np.isfinite(tau1)):
        return False
    try:
        factorize(problem.A - np.diag(tau1))
    except NotPositiveDefinite:
        return False
    return True
