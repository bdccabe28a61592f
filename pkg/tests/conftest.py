import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def ginibre_state(d, rng, rank=None):
    G = rng.standard_normal((d, rank or d)) + 1j * rng.standard_normal((d, rank or d))
    R = G @ G.conj().T
    return R / np.trace(R).real
