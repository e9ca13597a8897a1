import math

import numpy as np
import pytest

from vhbound.oracles import OracleEstimate, oracle_grid
from vhbound.posterior import (InconsistentInputs, build_posteriors, certify, l1_distances,
                               posterior_moments)
from vhbound.problem import InstanceSpec, generate_instance, make_problem
from vhbound.vh import InfeasibleParams, PivotParams, minimize


def test_gaussian_pair():
    p = make_problem([[2.0]], [0.0], "one")
    pair = build_posteriors(p, PivotParams.from_alpha([1.0], [0.0], 2.0))
    loc, sd = pair.p1_location()
    assert loc[0] == 0.0 and sd[0] ** 2 == pytest.approx(0.5)
    assert pair.cov2[0, 0] == pytest.approx(0.5)
    assert pair.weights == (0.5, 0.5)
    for m in posterior_moments(pair):
        assert m[0] == pytest.approx(0.0, abs=1e-15)


def test_step_pair():
    p = make_problem([[1.0]])
    pair = build_posteriors(p, PivotParams.from_alpha([0.5], [0.0], 2.0))
    _, sd = pair.p1_location()
    assert 1 / sd[0] ** 2 == pytest.approx(1.0)          # precision alpha1 tau1
    assert pair.cov2[0, 0] == pytest.approx(1.0)           # 1 / (2 * 0.5)
    assert pair.mean1[0] == pytest.approx(math.sqrt(2 / math.pi))


def test_mixture_mean_arithmetic():
    p = make_problem(np.eye(2), [0.5, -0.3])
    pair = build_posteriors(p, PivotParams.from_alpha([0.4, 0.3], [0.1, 0.2], 2.0))
    m1, m2, mix = posterior_moments(pair)
    np.testing.assert_allclose(mix, 0.5 * m1 + 0.5 * m2)


def test_mean2_independent_solve(rng):
    p = generate_instance(InstanceSpec(6, 0.5, 2))
    params = PivotParams(np.full(6, 0.2), rng.normal(size=6), 0.4)
    pair = build_posteriors(p, params)
    ref = np.linalg.lstsq(p.A - np.diag(params.tau1), p.b - params.tau2, rcond=None)[0]
    np.testing.assert_allclose(pair.mean2, ref, rtol=1e-10, atol=1e-12)


def test_densities_normalised():
    p = make_problem([[2.0, 0.6], [0.6, 1.0]], [0.3, -0.2])
    pair = build_posteriors(p, PivotParams([0.3, 0.2], [0.1, -0.1], 0.5))
    from vhbound.quadrature import tensor_grid
    g = tensor_grid([0, 0], [15, 15], panels=60, breakpoints=[[0], [0]])
    assert np.sum(g.weights * np.exp(pair.log_p1(g.points))) == pytest.approx(1.0, abs=1e-9)
    g = tensor_grid(pair.mean2 - 14, pair.mean2 + 14, panels=60)
    assert np.sum(g.weights * np.exp(pair.log_p2(g.points))) == pytest.approx(1.0, abs=1e-9)


def test_infeasible_params():
    with pytest.raises(InfeasibleParams):
        build_posteriors(make_problem(np.eye(2)), PivotParams([2.0, 0.1], [0, 0], 0.0))


def test_certify_tight():
    c = certify(0.3, OracleEstimate(0.3, 0.0, "grid", 1), 1.5)
    assert c.epsilon == 0.0 and c.distance_bound == 0.0 and c.certified == "p1"


def test_certify_arithmetic():
    log_i = 1.0 + math.log(0.98)
    c = certify(1.0, OracleEstimate(log_i, 0.0, "grid", 1), 3.0)
    assert c.epsilon == pytest.approx(0.02, abs=1e-15)
    assert c.distance_bound == pytest.approx(0.22, abs=1e-14)
    assert c.certified == "p2"
    assert certify(1.0, OracleEstimate(log_i, 0.0, "grid", 1), 2.0).certified == "both"


def test_certify_noise_clips():
    with pytest.warns(RuntimeWarning):
        c = certify(1.0, OracleEstimate(1.01, 0.05, "importance", 10), 1.5)
    assert c.epsilon == 0.0 and c.clipped and c.raw_epsilon < 0


def test_certify_inconsistent():
    with pytest.raises(InconsistentInputs):
        certify(1.0, OracleEstimate(1.5, 0.01, "importance", 10), 1.5)


def test_l1_certificate_and_scaled_target_2d():
    p = generate_instance(InstanceSpec(2, 1.0, 1, truncated=(True, False)))
    r = minimize(p)
    pair = build_posteriors(p, r.params)
    o = oracle_grid(p)
    c = certify(r.log_bound, o, r.alpha1)
    d = l1_distances(pair, o.log_integral)
    assert d["mass_star"] == pytest.approx(1.0, abs=1e-8)
    assert d["p1"] <= c.distance_bound
    assert d["p1_scaled"] <= math.sqrt(2 * c.epsilon)
