import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("qundo", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qundo")


def random_density_matrix(rng, rank=None):
    rank = rank or rng.integers(1, 6)
    g = rng.normal(size=(5, rank)) + 1j * rng.normal(size=(5, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(rng):
    v = rng.normal(size=5) + 1j * rng.normal(size=5)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
