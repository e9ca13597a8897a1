import math

import numpy as np
import pytest

LOG_HALF_GAUSS = math.log(math.sqrt(2.0 * math.pi) / 2.0)  # 0.2257913526...


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, n, jitter=0.3):
    m = rng.normal(size=(n, n))
    return m @ m.T / n + jitter * np.eye(n)
