import numpy as np
import pytest

from verifiers.linalg_core import SymmetricMatrix
from verifiers.regression_core import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def random_spd(rng, dim, ridge=1.0):
    b = rng.standard_normal((dim, dim))
    return SymmetricMatrix.symmetrized(b.T @ b + ridge * np.eye(dim))


def random_symmetric(rng, dim, scale=1.0):
    a = scale * rng.standard_normal((dim, dim))
    return SymmetricMatrix.symmetrized(a)


@pytest.fixture
def spd_factory(rng):
    return lambda dim, ridge=1.0: random_spd(rng, dim, ridge)


@pytest.fixture
def small_dataset(rng):
    x = rng.standard_normal((200, 5))
    y = x @ np.array([1.0, -0.5, 0.0, 0.25, 2.0]) + 0.3 * rng.standard_normal(200)
    return Dataset(x=x, y=y)
