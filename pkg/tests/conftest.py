import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_directed(rng, n, density=0.5):
    W = rng.random((n, n))
    W[rng.random((n, n)) < density] = 0.0
    return W
