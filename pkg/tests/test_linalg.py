import math

import numpy as np
import pytest

from vhbound.linalg import NotPositiveDefinite, factorize, is_feasible, j_function, min_eigenvalue
from vhbound.problem import InstanceSpec, generate_instance, make_problem

from conftest import random_spd


def test_identity():
    f = factorize(np.eye(3))
    assert np.array_equal(f.L, np.eye(3)) and f.logdet == 0.0


def test_diagonal_logdet():
    assert factorize([[4.0, 0.0], [0.0, 1.0]]).logdet == pytest.approx(math.log(4.0), abs=1e-15)


def test_not_pd_pivot():
    with pytest.raises(NotPositiveDefinite) as info:
        factorize([[1.0, 2.0], [2.0, 1.0]])
    assert info.value.pivot == 1


@pytest.mark.parametrize("M,v,expected", [
    (np.eye(2), np.zeros(2), 0.0),
    ([[2.0]], [1.0], -0.5 * math.log(2.0) + 0.25),
    (2 * np.eye(2), [1.0, 1.0], -0.5 * math.log(4.0) + 0.5),
])
def test_j_function_examples(M, v, expected):
    assert j_function(M, v) == pytest.approx(expected, abs=1e-14)


def test_j_function_example_values():
    assert j_function([[2.0]], [1.0]) == pytest.approx(-0.09657, abs=1e-5)
    assert j_function(2 * np.eye(2), [1.0, 1.0]) == pytest.approx(-0.19315, abs=1e-5)


def test_j_function_vs_dense(rng):
    for n in (1, 3, 8, 20):
        M = random_spd(rng, n)
        v = rng.normal(size=n)
        ref = -0.5 * np.linalg.slogdet(M)[1] + 0.5 * v @ np.linalg.solve(M, v)
        assert j_function(M, v) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_factorize_recovers_l(rng):
    for n in (2, 5, 10):
        L = np.tril(rng.normal(size=(n, n)))
        np.fill_diagonal(L, np.abs(np.diag(L)) + 0.5)
        np.testing.assert_allclose(factorize(L @ L.T).L, L, rtol=1e-9, atol=1e-10)


def test_reconstruction(rng):
    M = random_spd(rng, 12)
    L = factorize(M).L
    assert np.linalg.norm(L @ L.T - M) <= 1e-10 * np.linalg.norm(M)


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.diag([3.0, 1.0, 2.0])) == pytest.approx(1.0, rel=1e-12)
    assert min_eigenvalue([[2.0, 1.0], [1.0, 2.0]]) == pytest.approx(1.0, rel=1e-12)
    p = generate_instance(InstanceSpec(6, 0.1, 4))
    assert min_eigenvalue(p.A) == pytest.approx(0.1, rel=1e-8)


def test_feasibility_examples():
    p = make_problem(np.eye(2))
    assert is_feasible(p, [0.5, 0.5])
    assert not is_feasible(p, [1.5, 0.5])
    assert not is_feasible(p, [-0.1, 0.5])


def test_feasible_set_convex(rng):
    A = random_spd(rng, 4)
    p = make_problem(A)
    pts = []
    while len(pts) < 10:
        t = rng.uniform(0, 1.5, size=4)
        if is_feasible(p, t):
            pts.append(t)
    for a in pts:
        for b in pts:
            for lam in (0.25, 0.5, 0.75):
                assert is_feasible(p, lam * a + (1 - lam) * b)
