import math

import numpy as np
import pytest

from vhbound.oracles import oracle_grid
from vhbound.problem import InstanceSpec, generate_instance, make_problem
from vhbound.vb import (MeanFieldParams, UnsupportedFactor, VbOptions, vb_bound, vb_gradient,
                        vb_maximize, vb_moments)

from conftest import LOG_HALF_GAUSS


def test_half_normal_moments():
    m1, ett = vb_moments(MeanFieldParams([0.0], [1.0]))
    assert m1[0] == pytest.approx(math.sqrt(2 / math.pi), abs=1e-15)
    assert ett[0, 0] == pytest.approx(1.0, abs=1e-14)


def test_far_moments():
    m1, ett = vb_moments(MeanFieldParams([10.0], [1.0]))
    assert m1[0] == pytest.approx(10.0, rel=1e-12)
    assert ett[0, 0] == pytest.approx(101.0, rel=1e-12)


def test_symmetric_moments():
    m1, ett = vb_moments(MeanFieldParams([0.3, 0.3], [0.8, 0.8]))
    assert m1[0] == m1[1] and ett[0, 1] == ett[1, 0] and ett[0, 1] == pytest.approx(m1[0] ** 2)


def test_bound_examples():
    p1 = make_problem([[1.0]])
    assert vb_bound(p1, MeanFieldParams([0.0], [1.0])) == pytest.approx(LOG_HALF_GAUSS, abs=1e-15)
    assert vb_bound(p1, MeanFieldParams([3.0], [0.1])) < LOG_HALF_GAUSS
    p2 = make_problem(np.eye(2))
    assert vb_bound(p2, MeanFieldParams([0.0, 0.0], [1.0, 1.0])) == pytest.approx(2 * LOG_HALF_GAUSS, abs=1e-14)


def test_unsupported_factor():
    with pytest.raises(UnsupportedFactor):
        vb_bound(make_problem(np.eye(2), None, "one"), MeanFieldParams([0, 0], [1, 1]))


def test_gradient_vs_fd(rng):
    p = generate_instance(InstanceSpec(4, 0.5, 3))
    for _ in range(5):
        params = MeanFieldParams(rng.normal(size=4), np.exp(rng.normal(size=4) * 0.3))
        x = params.to_vector()
        fd = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = 1e-6
            fd[i] = (vb_bound(p, MeanFieldParams.from_vector(x + e))
                     - vb_bound(p, MeanFieldParams.from_vector(x - e))) / 2e-6
        np.testing.assert_allclose(vb_gradient(p, params), fd, rtol=1e-5, atol=1e-7)


def test_maximize_1d_exact():
    r = vb_maximize(make_problem([[1.0]]))
    assert r.lower_bound == pytest.approx(LOG_HALF_GAUSS, abs=1e-7)
    assert r.params.mu[0] == pytest.approx(0.0, abs=1e-3)
    assert r.params.sigma[0] == pytest.approx(1.0, abs=1e-3)


def test_maximize_separable():
    b = np.array([0.7, -0.4])
    r = vb_maximize(make_problem(np.eye(2), b))
    singles = [vb_maximize(make_problem([[1.0]], [bi])).lower_bound for bi in b]
    assert r.lower_bound == pytest.approx(sum(singles), abs=1e-6)


def test_starts_agree_on_separable():
    p = make_problem([[1.3]], [0.2])
    vals = [vb_maximize(p, VbOptions(n_starts=1), init=MeanFieldParams([m], [s])).lower_bound
            for m, s in [(0.1, 1.0), (2.0, 0.3), (-1.0, 2.0), (0.5, 0.5), (3.0, 3.0)]]
    assert max(vals) - min(vals) <= 1e-6


def test_moments_valid():
    r = vb_maximize(generate_instance(InstanceSpec(5, 1.0, 2)))
    assert np.all(r.mean > 0) and np.all(np.diag(r.second_moment) >= r.mean ** 2)


def test_below_oracle():
    for seed in range(3):
        p = generate_instance(InstanceSpec(2, 0.5, seed))
        assert vb_maximize(p).lower_bound <= oracle_grid(p).log_integral + 1e-9
