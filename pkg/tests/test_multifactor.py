import math

import numpy as np
import pytest

from vhbound.multifactor import (GaussianFactor, KFactorSpec, binary_spec,
                                 holder_log_bound_quadrature, k_factor_initialize,
                                 k_factor_log_bound, k_factor_minimize, log_product_integral)
from vhbound.problem import ONE, STEP, Tabulated, make_problem
from vhbound.vh import PivotParams, log_bound, minimize


def test_binary_reduction(rng):
    for _ in range(20):
        A, b = rng.uniform(0.2, 3.0), rng.normal()
        p = make_problem([[A]], [b], rng.choice(["step", "one"]))
        params = PivotParams.from_alpha([rng.uniform(0.05, 0.95) * A], [rng.normal()], rng.uniform(1.1, 5))
        assert k_factor_log_bound(binary_spec(p, params)) == pytest.approx(log_bound(p, params), abs=1e-10)


def test_trivial_third_factor_limit():
    f1, f2 = GaussianFactor(1.5, 0.3), STEP
    two = KFactorSpec((f1, f2), [0.4, 0.1], [0.1, 0.2], [0.3])
    three = KFactorSpec((f1, ONE, f2), [0.4, 0.0, 0.1], [0.1, 0.0, 0.2], [0.3, -30.0])
    assert k_factor_log_bound(three) == pytest.approx(k_factor_log_bound(two), abs=1e-6)


def test_uniform_start_finite():
    spec = k_factor_initialize((GaussianFactor(1.0, 0.2), GaussianFactor(2.0, -0.1), STEP))
    np.testing.assert_allclose(spec.inv_alphas, 1 / 3)
    assert np.isfinite(k_factor_log_bound(spec))


def test_infeasible_is_inf():
    spec = KFactorSpec((GaussianFactor(1.0, 0.0), STEP), [0.0, 2.0], [0.0, 0.0], [0.0])
    assert k_factor_log_bound(spec) == math.inf


def test_gaussian_factors_tight():
    fs = (GaussianFactor(1.0, 0.5), GaussianFactor(0.5, -0.2), GaussianFactor(2.0, 1.0))
    r = k_factor_minimize(k_factor_initialize(fs))
    assert r.log_bound == pytest.approx(log_product_integral(fs), abs=1e-6)


@pytest.mark.parametrize("A,b", [(1.0, 0.0), (2.0, 0.7), (0.5, -1.0)])
def test_binary_minimum_matches_solver(A, b):
    vh = minimize(make_problem([[A]], [b]))
    kf = k_factor_minimize(k_factor_initialize((STEP, GaussianFactor(A, b))))
    assert kf.log_bound == pytest.approx(vh.log_bound, abs=1e-6)


def _random_tab(rng):
    x = np.sort(rng.uniform(-3, 3, 8))
    return Tabulated(x, rng.uniform(0.1, 2.0, 8))


def test_bound_dominates_tabulated(rng):
    for K in (2, 3, 4):
        for _ in range(10):
            fs = tuple(_random_tab(rng) for _ in range(K))
            truth = log_product_integral(fs)
            spec = KFactorSpec(fs, rng.normal(size=K), rng.normal(size=K), rng.normal(size=K - 1))
            assert k_factor_log_bound(spec) >= truth - 1e-10


def test_adding_trivial_factor_never_worse():
    fs = (GaussianFactor(1.0, 0.3), STEP)
    base = k_factor_minimize(k_factor_initialize(fs)).log_bound
    more = k_factor_minimize(k_factor_initialize((GaussianFactor(1.0, 0.3), ONE, STEP))).log_bound
    assert more <= base + 1e-6 or more >= log_product_integral(fs)


def test_convex_in_pivots(rng):
    fs = (GaussianFactor(1.0, 0.3), _random_tab(rng), GaussianFactor(0.7, -0.2))
    logits = np.array([0.2, -0.1])
    for _ in range(20):
        a = KFactorSpec(fs, rng.uniform(-0.2, 0.2, 3), rng.normal(size=3), logits)
        b = KFactorSpec(fs, rng.uniform(-0.2, 0.2, 3), rng.normal(size=3), logits)
        fa, fb = k_factor_log_bound(a), k_factor_log_bound(b)
        if not (np.isfinite(fa) and np.isfinite(fb)):
            continue
        for lam in (0.25, 0.5, 0.75):
            mid = KFactorSpec(fs, lam * a.c + (1 - lam) * b.c, lam * a.d + (1 - lam) * b.d, logits)
            assert k_factor_log_bound(mid) <= lam * fa + (1 - lam) * fb + 1e-9


def test_equality_pivot_on_grid(rng):
    tab = _random_tab(rng)
    A, b, alpha1 = 0.8, 0.3, 1.7
    alpha2 = alpha1 / (alpha1 - 1)
    lo, hi = tab.support

    def lg2(t):
        return -0.5 * A * t * t + b * t

    nodes = np.linspace(lo, hi, 4001)
    with np.errstate(divide="ignore"):
        psi_nodes = -tab.log_value(nodes) / alpha2 + lg2(nodes) / alpha1

    def log_psi(t):
        return np.interp(t, nodes, psi_nodes)

    bound = holder_log_bound_quadrature(tab.log_value, lg2, log_psi, alpha1, lo, hi, tab.x)
    assert bound == pytest.approx(log_product_integral((tab, GaussianFactor(A, b))), abs=1e-6)
