"""
Epsilon-nets of the k-sparse unit ball and the finite-maximum bounds they give.

Every vector with at most k nonzeros lies in the unit ball of some support of
size exactly k, so the net is one base net of the k-dimensional unit ball
embedded into each k-subset of coordinates. Base nets are certified for
k <= 2 (interval grid, centre plus concentric rings) and built by seeded greedy
packing for k >= 3.
"""
import itertools
import logging
import math
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from verifiers.data_gen import stream
from verifiers.errors import InputError, NetConstructionError
from verifiers.linalg_core import SymmetricMatrix, as_vector

logger = logging.getLogger(__name__)

# certified layouts are built against a slightly smaller radius
CERT_MARGIN = 1e-9
PROPOSALS_PER_DIM = 10_000
MAX_LAYOUT_NODES = 200_000
EPS_GAMMA = 0.5
EPS_SIGMA = 0.25


class Ring(NamedTuple):
    count: int
    radius: float
    inner: float
    outer: float


class CoveringResult(NamedTuple):
    samples: int
    failures: int
    worst: float


def _ring_reach(m: int, covered: float, eps: float) -> Optional[Ring]:
    """Widest annulus [inner, outer] with inner <= covered covered by m points on a circle.

    A point at radius r is within eps of the nearest of m equally spaced points at
    radius R iff R^2 + r^2 - 2 R r cos(pi/m) <= eps^2, so the covered radii form the
    interval R c -+ sqrt(eps^2 - R^2 s^2) with c = cos(pi/m), s = sin(pi/m).
    """
    c, s = math.cos(math.pi / m), math.sin(math.pi / m)
    best = eps * c / s
    disc = eps ** 2 - (covered * s) ** 2
    lo_limit = covered * c + math.sqrt(disc) if disc >= 0 else math.inf
    radius = min(best, lo_limit, 1.0)
    half = math.sqrt(max(eps ** 2 - (radius * s) ** 2, 0.0))
    inner, outer = radius * c - half, radius * c + half
    if inner > covered or outer <= covered:
        return None
    return Ring(m, radius, inner, outer)


def ring_layout(eps: float, budget: int) -> List[Ring]:
    """
    Rings around a centre point that cover the unit disk within eps.

    Args:
        eps: covering radius in (0, 1)
        budget: maximal number of ring points (the centre is not counted)

    Returns:
        rings, innermost first; the annuli chain from eps to 1
    """
    target = eps * (1.0 - CERT_MARGIN)
    nodes = 0

    def search(covered: float, left: int) -> Optional[List[Ring]]:
        nonlocal nodes
        if covered >= 1.0:
            return []
        # each point covers at most an eps-disk of the remaining annulus
        if left < (1.0 - covered ** 2) / target ** 2 - 1e-12:
            return None
        for m in range(3, left + 1):
            nodes += 1
            if nodes > MAX_LAYOUT_NODES:
                return None
            ring = _ring_reach(m, covered, target)
            if ring is None:
                continue
            rest = search(ring.outer, left - m)
            if rest is not None:
                return [ring] + rest
        return None

    if target >= 1.0:
        return []
    layout = search(target, budget)
    if layout is None:
        raise NetConstructionError(f"no ring layout with at most {budget} points covers the disk at eps={eps}")
    return layout


def certify_rings(rings: Sequence[Ring], eps: float) -> bool:
    """True iff the centre disk and ring annuli chain over [0, 1] within eps."""
    covered = eps
    for ring in rings:
        fresh = _annulus(ring.count, ring.radius, eps)
        if fresh is None or fresh[0] > covered or ring.radius > 1.0:
            return False
        covered = max(covered, fresh[1])
    return covered >= 1.0


def _annulus(m: int, radius: float, eps: float) -> Optional[Tuple[float, float]]:
    c, s = math.cos(math.pi / m), math.sin(math.pi / m)
    disc = eps ** 2 - (radius * s) ** 2
    if disc < 0:
        return None
    return radius * c - math.sqrt(disc), radius * c + math.sqrt(disc)


def _interval_net(eps: float) -> np.ndarray:
    m = math.ceil(1.0 / eps)
    if m == 1:
        return np.zeros((1, 1))
    return np.linspace(-1.0 + eps, 1.0 - eps, m)[:, None]


def _disk_net(eps: float) -> np.ndarray:
    rings = ring_layout(eps, math.floor((1.0 + 1.0 / eps) ** 2))
    if not certify_rings(rings, eps):
        raise NetConstructionError(f"ring layout failed its certificate at eps={eps}")
    points = [np.zeros(2)]
    for idx, ring in enumerate(rings):
        offset = math.pi * (idx % 2) / ring.count
        angles = offset + 2.0 * math.pi * np.arange(ring.count) / ring.count
        points.extend(ring.radius * np.column_stack([np.cos(angles), np.sin(angles)]))
    return np.array(points)


def _sample_ball(rng: np.random.Generator, dim: int, size: int) -> np.ndarray:
    direction = rng.standard_normal((size, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.random(size) ** (1.0 / dim)
    return direction * radius[:, None]


def _packing_net(eps: float, dim: int, seed: int) -> np.ndarray:
    """Greedy maximal eps-packing of sampled ball points; order fixed by the seed."""
    proposals = _sample_ball(stream(seed, "net", dim), dim, PROPOSALS_PER_DIM * dim)
    kept = [np.zeros(dim)]
    kept_array = np.zeros((1, dim))
    for point in proposals:
        if np.min(np.sum((kept_array - point) ** 2, axis=1)) > eps ** 2:
            kept.append(point)
            kept_array = np.array(kept)
    return kept_array


def base_net(eps: float, dim: int, seed: int = 0) -> np.ndarray:
    """Net of the dim-dimensional unit ball; row 0 is the origin for dim >= 2."""
    if dim == 1:
        return _interval_net(eps)
    if dim == 2:
        return _disk_net(eps)
    return _packing_net(eps, dim, seed)


def cardinality_bounds(p: int, k: int, eps: float) -> Tuple[float, float]:
    """(sum_{s<=k} C(p,s)(1+1/eps)^s, ((1+1/eps) e p / k)^k)."""
    x = 1.0 + 1.0 / eps
    total = float(sum(math.comb(p, s) * x ** s for s in range(1, k + 1)))
    try:
        closed = (x * math.e * p / k) ** k
    except OverflowError:
        closed = math.inf
    return total, closed


class SparseNet:
    """Finite eps-net of the k-sparse unit ball in R^p.

    points[i] lives on supports[i]; the origin is stored once with support ().
    """

    def __init__(self, eps: float, p: int, k: int, points: np.ndarray, supports: List[Tuple[int, ...]], per_support: int):
        self.eps = eps
        self.p = p
        self.k = k
        self.points = points
        self.supports = supports
        self.per_support = per_support
        self.sum_bound, self.closed_bound = cardinality_bounds(p, k, eps)

    def __len__(self) -> int:
        return self.points.shape[0]

    def check_cardinality(self) -> None:
        if not len(self) <= self.sum_bound <= self.closed_bound * (1.0 + 1e-12):
            raise NetConstructionError(
                f"cardinality chain violated: {len(self)} <= {self.sum_bound:.6g} <= {self.closed_bound:.6g} fails"
            )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.points, columns=[f"x{j}" for j in range(self.p)])
        frame.insert(0, "support", [";".join(str(j) for j in s) for s in self.supports])
        return frame

    def save_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path


def build_net(p: int, k: int, eps: float, seed: int = 0) -> SparseNet:
    """
    Build an eps-net of the k-sparse unit ball.

    Args:
        p: ambient dimension
        k: sparsity, 1 <= k <= p
        eps: covering radius in (0, 1)
        seed: seed for the greedy packing used when k >= 3

    Returns:
        SparseNet whose cardinality chain has been checked

    Raises:
        NetConstructionError: no certified layout or the cardinality chain fails
    """
    if not 0.0 < eps < 1.0:
        raise InputError(f"eps must lie in (0, 1), got {eps}")
    if not 1 <= k <= p:
        raise InputError(f"need 1 <= k <= p, got k={k}, p={p}")
    base = base_net(eps, k, seed)
    shared_origin = k >= 2
    rows = base[1:] if shared_origin else base
    supports_of = list(itertools.combinations(range(p), k))
    points = np.zeros((len(supports_of) * rows.shape[0] + int(shared_origin), p))
    supports: List[Tuple[int, ...]] = [()] if shared_origin else []
    start = int(shared_origin)
    for support in supports_of:
        stop = start + rows.shape[0]
        points[start:stop, list(support)] = rows
        supports.extend([support] * rows.shape[0])
        start = stop
    net = SparseNet(eps, p, k, points, supports, base.shape[0])
    net.check_cardinality()
    logger.info(f"net p={p} k={k} eps={eps}: {len(net)} points ({base.shape[0]} per support)")
    return net


def sample_theta(p: int, k: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draws from the k-sparse unit ball.

    The support is uniform among nonempty subsets of size <= k, the direction
    uniform on its sphere and the radius U^(1/s).
    """
    sizes = np.arange(1, k + 1)
    weights = np.array([math.comb(p, int(s)) for s in sizes], dtype=float)
    drawn = rng.choice(sizes, size=size, p=weights / weights.sum())
    out = np.zeros((size, p))
    for i, s in enumerate(drawn):
        support = rng.choice(p, size=int(s), replace=False)
        out[i, support] = _sample_ball(rng, int(s), 1)[0]
    return out


def nearest_distances(net: SparseNet, samples: np.ndarray, chunk: int = 2048) -> np.ndarray:
    norms = np.sum(net.points ** 2, axis=1)
    out = np.empty(samples.shape[0])
    for start in range(0, samples.shape[0], chunk):
        block = samples[start:start + chunk]
        sq = np.sum(block ** 2, axis=1)[:, None] + norms[None, :] - 2.0 * block @ net.points.T
        out[start:start + chunk] = np.sqrt(np.maximum(np.min(sq, axis=1), 0.0))
    return out


def validate_covering(net: SparseNet, samples: int = 10_000, seed: int = 0) -> CoveringResult:
    """Count sampled points of the k-sparse ball farther than eps from the net."""
    thetas = sample_theta(net.p, net.k, samples, stream(seed, "covering", net.p, net.k))
    distances = nearest_distances(net, thetas)
    failures = int(np.sum(distances > net.eps * (1.0 + 1e-9)))
    if failures:
        logger.warning(f"covering validation: {failures} of {samples} samples uncovered")
    return CoveringResult(samples, failures, float(np.max(distances)))


def _require_eps(net: SparseNet, eps: float) -> None:
    if not math.isclose(net.eps, eps, rel_tol=0.0, abs_tol=1e-12):
        raise InputError(f"net built with eps={net.eps}, this bound needs eps={eps}")


def net_sup_gamma(net: SparseNet, dgamma: np.ndarray) -> float:
    """max over the 1/2-net of |thetaᵀ dgamma|; D(k, dgamma) <= 2 * result."""
    _require_eps(net, EPS_GAMMA)
    v = as_vector(dgamma, net.p)
    return float(np.max(np.abs(net.points @ v)))


def net_sup_sigma(net: SparseNet, delta: SymmetricMatrix) -> float:
    """max over the 1/4-net of |thetaᵀ Delta theta|; RIP(k, Delta) <= 2 * result."""
    _require_eps(net, EPS_SIGMA)
    if delta.dim != net.p:
        raise InputError(f"matrix dimension {delta.dim} does not match net dimension {net.p}")
    quad = np.sum((net.points @ delta.values) * net.points, axis=1)
    return float(np.max(np.abs(quad)))


def net_sup_quadratic(net: SparseNet, values: np.ndarray) -> float:
    """max over net points of the sample mean of (thetaᵀ x)^2 over the rows x of ``values``."""
    projections = values @ net.points.T
    return float(np.max(np.mean(projections ** 2, axis=0)))


def net_summary(net: SparseNet, covering: Optional[CoveringResult] = None) -> Dict[str, float]:
    summary = {
        "p": net.p,
        "k": net.k,
        "eps": net.eps,
        "size": len(net),
        "per_support": net.per_support,
        "sum_bound": net.sum_bound,
        "closed_bound": net.closed_bound,
    }
    if covering is not None:
        summary.update({"samples": covering.samples, "failures": covering.failures, "worst_distance": covering.worst})
    return summary
