import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hermitian(rng, D, scale=1.0):
    x = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    return scale * 0.5 * (x + x.conj().T)


def random_state(rng, D, rank=None):
    rank = rank or D
    x = rng.normal(size=(D, rank)) + 1j * rng.normal(size=(D, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real
