import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from vhbound.estimators import MeanFieldVB, VariationalHolder, as_problem
from vhbound.problem import InstanceSpec, generate_instance

from conftest import LOG_HALF_GAUSS


def test_holder_fit_1d():
    est = VariationalHolder().fit([[1.0]])
    assert est.log_bound_ >= LOG_HALF_GAUSS - 1e-9
    assert est.score() == -est.log_bound_
    assert est.mean_.shape == (1,)


def test_gaussian_is_exact():
    est = VariationalHolder(factors="one").fit([[2.0]], [0.0])
    assert est.log_bound_ == pytest.approx(0.5 * math.log(math.pi), abs=1e-8)


def test_problem_input_and_clone():
    p = generate_instance(InstanceSpec(4, 1.0, 0))
    a = VariationalHolder(max_iter=200).fit(p)
    b = clone(a).fit(p)
    assert a.log_bound_ == b.log_bound_
    assert clone(a).get_params()["max_iter"] == 200


def test_mean_field_below_holder():
    p = generate_instance(InstanceSpec(5, 0.5, 3))
    lo = MeanFieldVB().fit(p).lower_bound_
    hi = VariationalHolder().fit(p).log_bound_
    assert lo <= hi


def test_unfitted_score():
    with pytest.raises(NotFittedError):
        VariationalHolder().score()


def test_as_problem_rejects_bad_shape():
    with pytest.raises(ValueError):
        as_problem(np.ones((2, 3)))
