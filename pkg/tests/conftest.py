import numpy as np
import pytest

from fddtraining.channel import exponential_correlation
from fddtraining.numerics import random_isometry


def random_hpd(rng, n, floor=0.1):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return g @ g.conj().T / n + floor * np.eye(n)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return g @ g.conj().T


def random_unitary_training(rng, n, t, rho):
    return np.sqrt(rho) * random_isometry(rng, n, t)


@pytest.fixture
def rng():
    return np.random.default_rng(20131)


@pytest.fixture
def r_exp():
    return exponential_correlation(8, 0.9)
