import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("spinphase", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("spinphase")

S_VALUES = (-1.0, -0.5, 0.0, 0.5, 1.0)


def random_matrix(rng, n, hermitian=False):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    if hermitian:
        A = 0.5 * (A + A.conj().T)
    return A


def random_density(rng, n):
    A = random_matrix(rng, n)
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
