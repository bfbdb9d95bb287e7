import math

import numpy as np
import pytest

from verifiers.data_gen import stream
from verifiers.errors import InputError
from verifiers.error_norms import dvec, rip
from verifiers.linalg_core import SymmetricMatrix
from verifiers.sparse_net import (
    EPS_GAMMA,
    EPS_SIGMA,
    base_net,
    build_net,
    cardinality_bounds,
    certify_rings,
    nearest_distances,
    net_summary,
    net_sup_gamma,
    net_sup_quadratic,
    net_sup_sigma,
    ring_layout,
    sample_theta,
    validate_covering,
)

from .conftest import random_symmetric


def test_singleton_net_cardinality():
    net = build_net(4, 1, 0.5)
    total, closed = cardinality_bounds(4, 1, 0.5)
    assert total == 12
    assert closed == pytest.approx(3 * math.e * 4)
    assert len(net) == 8 <= total <= closed
    assert net.per_support == 2


def test_coarse_net_bound():
    net = build_net(6, 1, 0.95)
    assert len(net) <= (2 * math.e * 6)
    assert validate_covering(net, samples=2000).failures == 0


@pytest.mark.parametrize("eps", [0.5, 0.25])
def test_ring_layout_is_certified(eps):
    rings = ring_layout(eps, math.floor((1 + 1 / eps) ** 2))
    assert certify_rings(rings, eps)
    assert 1 + sum(r.count for r in rings) <= (1 + 2 / eps) ** 2


def test_disk_net_covers_sampled_points():
    net = build_net(2, 2, 0.25)
    result = validate_covering(net, samples=10_000, seed=3)
    assert result.failures == 0
    assert result.worst <= 0.25 * (1 + 1e-9)


def test_dense_grid_covered():
    net = base_net(0.5, 2)
    grid = np.stack(np.meshgrid(np.linspace(-1, 1, 81), np.linspace(-1, 1, 81)), axis=-1).reshape(-1, 2)
    grid = grid[np.sum(grid ** 2, axis=1) <= 1.0]
    squared = np.sum((grid[:, None, :] - net[None, :, :]) ** 2, axis=2)
    assert np.max(np.sqrt(np.min(squared, axis=1))) <= 0.5


def test_points_are_sparse_and_in_ball():
    net = build_net(5, 2, 0.5)
    assert np.all(np.count_nonzero(net.points, axis=1) <= 2)
    assert np.all(np.linalg.norm(net.points, axis=1) <= 1 + 1e-12)
    assert net.supports[0] == ()
    frame = net.to_frame()
    assert list(frame.columns) == ["support"] + [f"x{j}" for j in range(5)]


def test_packing_net_for_three_dims():
    net = build_net(4, 3, 0.5, seed=1)
    again = build_net(4, 3, 0.5, seed=1)
    np.testing.assert_array_equal(net.points, again.points)
    assert len(net) <= net.sum_bound


def test_sampled_thetas_are_sparse_unit_ball():
    thetas = sample_theta(7, 3, 500, stream(0, "thetas"))
    assert np.all(np.count_nonzero(thetas, axis=1) <= 3)
    assert np.all(np.linalg.norm(thetas, axis=1) <= 1.0 + 1e-12)


def test_basis_direction_gamma():
    net = build_net(5, 2, EPS_GAMMA)
    dgamma = np.zeros(5)
    dgamma[0] = -3.0
    assert 2 * net_sup_gamma(net, dgamma) >= dvec(2, dgamma).value


def test_zero_inputs():
    assert net_sup_gamma(build_net(4, 2, EPS_GAMMA), np.zeros(4)) == 0.0
    assert net_sup_sigma(build_net(4, 2, EPS_SIGMA), SymmetricMatrix.zeros(4)) == 0.0


def test_random_gamma_discretization(rng):
    net = build_net(8, 2, EPS_GAMMA)
    for _ in range(100):
        dgamma = rng.standard_normal(8)
        assert dvec(2, dgamma).value <= 2 * net_sup_gamma(net, dgamma) + 1e-12


def test_diagonal_spike_sigma():
    net = build_net(6, 2, EPS_SIGMA)
    delta = SymmetricMatrix(np.diag([0.0, 0.0, 4.0, 0.0, 0.0, 0.0]))
    assert rip(2, delta).value <= 2 * net_sup_sigma(net, delta)


def test_random_sigma_discretization(rng):
    net = build_net(6, 2, EPS_SIGMA)
    for _ in range(100):
        delta = random_symmetric(rng, 6)
        assert rip(2, delta).value <= 2 * net_sup_sigma(net, delta) + 1e-12


def test_wrong_eps_rejected():
    with pytest.raises(InputError):
        net_sup_sigma(build_net(4, 2, EPS_GAMMA), SymmetricMatrix.identity(4))


def test_invalid_parameters():
    with pytest.raises(InputError):
        build_net(4, 2, 1.0)
    with pytest.raises(InputError):
        build_net(4, 5, 0.5)


def test_quadratic_and_summary(rng):
    net = build_net(3, 1, 0.5)
    values = rng.standard_normal((100, 3))
    expected = max(np.mean((values @ pt) ** 2) for pt in net.points)
    assert net_sup_quadratic(net, values) == pytest.approx(expected)
    assert np.all(nearest_distances(net, net.points) <= 1e-7)
    summary = net_summary(net, validate_covering(net, samples=1000))
    assert summary["size"] == len(net)
    assert summary["failures"] == 0
