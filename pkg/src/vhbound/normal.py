"""Numerically stable standard-normal helpers.

``log_ndtr`` and ``ndtri_exp`` from scipy already switch to asymptotic
expansions in the far left tail, so log Phi(x) stays finite down to x ~ -1e150.
"""

import math

import numpy as np
from scipy.special import erfcx, log_ndtr, ndtri_exp

LOG_2PI = math.log(2.0 * math.pi)
LOG_SQRT_2PI = 0.5 * LOG_2PI


def log_phi(x):
    """Log of the standard normal CDF."""
    return log_ndtr(x)


def log_pdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - LOG_SQRT_2PI


def inverse_mills(z):
    """phi(z) / Phi(z), evaluated in log space."""
    z = np.asarray(z, dtype=float)
    return np.exp(log_pdf(z) - log_ndtr(z))


def log_gauss_orthant(b, prec):
    """log of int_0^inf exp(-prec t^2 / 2 + b t) dt.

    Written as sqrt(pi / (2 prec)) * erfcx(-b / sqrt(2 prec)) on the left tail so
    the exp(b^2 / 2 prec) factor never has to cancel against a tiny Phi.
    """
    b = np.asarray(b, dtype=float)
    prec = np.asarray(prec, dtype=float)
    z = b / np.sqrt(prec)
    base = 0.5 * (LOG_2PI - np.log(prec))
    with np.errstate(over="ignore", invalid="ignore"):
        left = base + np.log(0.5 * erfcx(-z / math.sqrt(2.0)))
    right = base + 0.5 * z * z + log_ndtr(z)
    return np.where(z < 0, left, right)


_CF_TERMS = 80
_CF_SWITCH = 5.0


def _mills_tail(x):
    """Continued-fraction tails for large x.

    With 1/R(x) = x + t1, t_k = k / (x + t_{k+1}) (Laplace), returns
    ``(t1, t2 - t1)`` so that z + lambda(z) and the variance ratio come out
    without subtracting nearly equal numbers.
    """
    t = np.zeros_like(x)
    t3 = t
    for k in range(_CF_TERMS, 2, -1):
        t = k / (x + t)
    t3 = t
    t2 = 2.0 / (x + t3)
    t1 = 1.0 / (x + t2)
    diff = (x + 2.0 * t2 - t3) / ((x + t2) * (x + t3))
    return t1, diff


def truncnorm_moments(mean, sd):
    """Raw moments (E[t], E[t^2]) of N(mean, sd^2) truncated to t >= 0."""
    mean, sd = np.broadcast_arrays(np.asarray(mean, dtype=float), np.asarray(sd, dtype=float))
    z = mean / sd
    with np.errstate(over="ignore", invalid="ignore"):
        lam = inverse_mills(z)
        m1 = mean + sd * lam
        var = sd * sd * (1.0 - lam * (lam + z))
    deep = z < -_CF_SWITCH
    if np.any(deep):
        delta, diff = _mills_tail(-z[deep])
        m1 = np.array(m1, dtype=float)
        var = np.array(var, dtype=float)
        m1[deep] = sd[deep] * delta
        var[deep] = sd[deep] ** 2 * delta * diff
    var = np.maximum(var, 0.0)
    return m1, m1 * m1 + var


def truncnorm_entropy(mean, sd):
    """Differential entropy of N(mean, sd^2) truncated to t >= 0.

    Equals 0.5 log(2 pi e) + log(sd Phi(z)) - z lambda(z) / 2 with z = mean/sd;
    on the deep left tail the two large terms are combined analytically.
    """
    mean, sd = np.broadcast_arrays(np.asarray(mean, dtype=float), np.asarray(sd, dtype=float))
    z = mean / sd
    with np.errstate(over="ignore", invalid="ignore"):
        core = log_ndtr(z) - 0.5 * z * inverse_mills(z)
    deep = z < -_CF_SWITCH
    if np.any(deep):
        x = -z[deep]
        delta, _ = _mills_tail(x)
        core = np.array(core, dtype=float)
        # log Phi(-x) + x (x + delta) / 2 with the x^2/2 terms cancelled
        core[deep] = np.log(0.5 * erfcx(x / math.sqrt(2.0))) + 0.5 * x * delta
    return 0.5 * (LOG_2PI + 1.0) + np.log(sd) + core


def truncnorm_logpdf(t, mean, sd):
    """Log density of N(mean, sd^2) truncated to t >= 0 (``-inf`` for t < 0)."""
    t = np.asarray(t, dtype=float)
    z = (t - mean) / sd
    out = log_pdf(z) - np.log(sd) - log_ndtr(mean / sd)
    return np.where(t >= 0.0, out, -np.inf)


def truncnorm_sample(mean, sd, u):
    """Inverse-CDF draw from N(mean, sd^2) truncated to t >= 0.

    ``u`` holds uniforms in (0, 1). Sampling goes through the reflected
    variable so that deep truncations never evaluate Phi of a number near 1.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    z = mean / sd
    w = ndtri_exp(np.log(u) + log_ndtr(z))
    t = np.maximum(mean - sd * w, 0.0)
    deep = np.broadcast_to(z < _DEEP_Z, t.shape)
    if np.any(deep):
        zz = np.broadcast_to(z, t.shape)[deep]
        uu = np.broadcast_to(u, t.shape)[deep]
        ss = np.broadcast_to(sd, t.shape)[deep]
        t = np.array(t, copy=True)
        t[deep] = ss * _deep_tail_quantile(zz, np.log(uu))
    return t


# below this standardised mean log u + log Phi(z) loses the digits of log u
_DEEP_Z = -30.0


def _log_scaled_phi(y):
    """log Phi(y) + y^2/2, cancellation-free for y << 0."""
    return np.log(0.5 * erfcx(-y / math.sqrt(2.0)))


def _deep_tail_quantile(z, log_u):
    """x >= 0 with Phi(z - x) / Phi(z) = u, for z far below zero.

    The quadratic parts of both log Phi terms cancel analytically; the
    remaining equation is concave decreasing in x, so Newton from x = 0
    converges monotonically from the right after the first step.
    """
    base = _log_scaled_phi(z)
    x = np.zeros_like(z)
    for _ in range(100):
        y = z - x
        g = _log_scaled_phi(y) - base - 0.5 * x * (x - 2.0 * z) - log_u
        slope = -math.sqrt(2.0 / math.pi) / erfcx(-y / math.sqrt(2.0))
        step = g / slope
        x = np.maximum(x - step, 0.0)
        if np.all(np.abs(step) <= 1e-15 * np.maximum(x, 1e-300)):
            break
    return x
