import math
from itertools import combinations

import numpy as np
import pytest

from verifiers.errors import DomainError, InputError
from verifiers.error_norms import (
    dvec,
    elementwise_bounds,
    error_norm_report,
    lambda_sparse,
    relative_rip,
    rip,
    sparse_max_eigen,
    strength,
    strength_upper_bound,
)
from verifiers.linalg_core import SymmetricMatrix
from verifiers.regression_core import RegressionPair, beta_map

from .conftest import random_spd, random_symmetric


def _brute_op_norm(a, models):
    return max(np.max(np.abs(np.linalg.eigvalsh(a.values[np.ix_(m, m)]))) for m in models)


def test_rip_diagonal():
    result = rip(1, SymmetricMatrix(np.diag([1.0, -2.0])))
    assert result.value == pytest.approx(2.0)
    assert result.model == (1,)


def test_rip_zero():
    assert rip(2, SymmetricMatrix.zeros(4)).value == 0.0


@pytest.mark.parametrize("threads", [1, 2])
def test_rip_matches_brute_force(rng, threads):
    delta = random_symmetric(rng, 6)
    pairs = [list(m) for m in combinations(range(6), 2)]
    up_to_two = pairs + [[j] for j in range(6)]
    value = rip(2, delta, threads=threads).value
    assert value == pytest.approx(_brute_op_norm(delta, pairs), abs=1e-10)
    assert value == pytest.approx(_brute_op_norm(delta, up_to_two), abs=1e-10)


def test_dvec_top_two():
    result = dvec(2, np.array([3.0, 4.0, 0.0, 1.0]))
    assert result.value == pytest.approx(5.0)
    assert result.model == (0, 1)


def test_dvec_extremes(rng):
    v = rng.standard_normal(7)
    assert dvec(7, v).value == pytest.approx(np.linalg.norm(v))
    assert dvec(1, v).value == pytest.approx(np.max(np.abs(v)))


def test_dvec_rejects_bad_k():
    with pytest.raises(InputError):
        dvec(5, np.ones(3))


def test_lambda_diagonal():
    assert lambda_sparse(2, SymmetricMatrix(np.diag([1.0, 2.0, 3.0]))).value == pytest.approx(1.0)


@pytest.mark.parametrize("k", [1, 3])
def test_lambda_identity(k):
    assert lambda_sparse(k, SymmetricMatrix.identity(4)).value == pytest.approx(1.0)


def test_lambda_against_random_directions(rng):
    a = random_spd(rng, 6)
    exact = lambda_sparse(2, a).value
    sampled = math.inf
    for _ in range(10_000):
        support = rng.choice(6, size=2, replace=False)
        theta = np.zeros(6)
        theta[support] = rng.standard_normal(2)
        theta /= np.linalg.norm(theta)
        sampled = min(sampled, float(theta @ a.values @ theta))
    assert exact <= sampled + 1e-10
    assert sampled - exact <= 0.05 * exact


def test_sparse_max_eigen_diagonal():
    assert sparse_max_eigen(2, SymmetricMatrix(np.diag([1.0, 5.0, 3.0]))).value == pytest.approx(5.0)


def test_strength_identity_gram():
    gamma = np.array([0.5, -2.0, 1.0, 0.1])
    pair = RegressionPair(SymmetricMatrix.identity(4), gamma)
    assert strength(2, 2, pair).value == pytest.approx(dvec(2, gamma).value)


def test_strength_brute_force(rng):
    pair = RegressionPair(random_spd(rng, 5), rng.standard_normal(5))
    models = [m for s in (1, 2) for m in combinations(range(5), s)]
    s2 = strength(2, 2, pair)
    s1 = strength(1, 2, pair)
    assert s2.value == pytest.approx(max(np.linalg.norm(beta_map(pair, m)) for m in models))
    assert s1.value >= s2.value
    assert s2.skipped == []


def test_strength_rejects_r():
    with pytest.raises(InputError):
        strength(3, 1, RegressionPair(SymmetricMatrix.identity(2), [1.0, 1.0]))


def test_elementwise_bounds_tight_cases():
    rip_bound, _ = elementwise_bounds(2, SymmetricMatrix(np.ones((2, 2))), np.zeros(2))
    assert rip(2, SymmetricMatrix(np.ones((2, 2)))).value == pytest.approx(rip_bound)
    _, d_bound = elementwise_bounds(3, SymmetricMatrix.zeros(4), np.full(4, -0.7))
    assert dvec(3, np.full(4, -0.7)).value == pytest.approx(d_bound)


def test_elementwise_bounds_hold(rng):
    for _ in range(20):
        delta = random_symmetric(rng, 6)
        dgamma = rng.standard_normal(6)
        rip_bound, d_bound = elementwise_bounds(3, delta, dgamma)
        assert rip(3, delta).value <= rip_bound + 1e-12
        assert dvec(3, dgamma).value <= d_bound + 1e-12


def test_strength_bound_zero_response():
    pair = RegressionPair(SymmetricMatrix.identity(3), np.zeros(3))
    assert strength(2, 2, pair).value == 0.0
    assert strength_upper_bound(2, pair.sigma, 0.0) == (0.0, 0.0)


def test_strength_bound_gaussian_pair():
    rho = 0.6
    pair = RegressionPair(SymmetricMatrix.identity(3), [rho, 0.0, 0.0])
    s2, _ = strength_upper_bound(2, pair.sigma, 1.0)
    assert strength(2, 2, pair).value == pytest.approx(rho)
    assert rho <= s2 == pytest.approx(1.0)


def test_strength_bound_random_moments(rng):
    for _ in range(50):
        b = rng.standard_normal((7, 9))
        joint = b @ b.T / 9
        pair = RegressionPair(SymmetricMatrix.symmetrized(joint[:6, :6]), joint[:6, 6])
        s2_bound, s1_bound = strength_upper_bound(3, pair.sigma, float(joint[6, 6]))
        assert strength(2, 3, pair).value <= s2_bound * (1 + 1e-9)
        assert strength(1, 3, pair).value <= s1_bound * (1 + 1e-9)


def test_strength_bound_needs_positive_lambda():
    with pytest.raises(DomainError):
        strength_upper_bound(1, SymmetricMatrix(np.diag([1.0, 0.0])), 1.0)


def test_relative_rip_reductions(rng):
    sigma = random_spd(rng, 5)
    assert relative_rip(2, sigma, sigma).value == pytest.approx(0.0, abs=1e-9)
    assert relative_rip(2, sigma, SymmetricMatrix.identity(5)).value == pytest.approx(
        rip(2, sigma - SymmetricMatrix.identity(5)).value, abs=1e-9
    )
    assert relative_rip(3, sigma * 1.7, sigma).value == pytest.approx(0.7, abs=1e-9)


def test_report_fields(small_dataset):
    from verifiers.regression_core import empirical_pair

    pair1 = empirical_pair(small_dataset)
    pair2 = RegressionPair(SymmetricMatrix.identity(5), np.array([1.0, -0.5, 0.0, 0.25, 2.0]))
    report = error_norm_report(2, pair1, pair2)
    assert report.k == 2
    assert report.lambda_k == pytest.approx(1.0)
    assert report.s2k == pytest.approx(math.sqrt(4.0 + 1.0))
    assert report.rip == pytest.approx(rip(2, pair1.sigma - pair2.sigma).value)
