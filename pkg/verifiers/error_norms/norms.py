"""
Uniform-in-model error functionals: RIP, D, sparse extreme eigenvalues,
strength of regression and their elementwise bounds.
"""
import logging
import math
from typing import Iterator, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from verifiers.errors import DomainError, InputError, SingularModelError
from verifiers.linalg_core import (
    ModelIndex,
    SymmetricMatrix,
    as_vector,
    eig_extremes,
    jacobi_eigh,
    max_entry_norm,
    submatrix,
)
from verifiers.model_space import ModelClassSpec, first_argmax, first_argmin, map_chunks
from verifiers.regression_core import RegressionPair, beta_map

logger = logging.getLogger(__name__)


class SparseExtreme(NamedTuple):
    value: float
    model: Optional[ModelIndex]


class StrengthResult(NamedTuple):
    value: float
    model: Optional[ModelIndex]
    skipped: List[ModelIndex]


def _model_class(dim: int, k: int, exact: bool) -> ModelClassSpec:
    if not 1 <= k <= dim:
        raise InputError(f"need 1 <= k <= {dim}, got k={k}")
    return ModelClassSpec.exact(dim, k) if exact else ModelClassSpec(p=dim, k=k)


def _reduce_max(spec: ModelClassSpec, score, threads: int) -> SparseExtreme:
    def worker(models: Iterator[ModelIndex]) -> Tuple[float, Optional[ModelIndex]]:
        best: Tuple[float, Optional[ModelIndex]] = (-math.inf, None)
        for m in models:
            value = score(m)
            if value > best[0]:
                best = (value, m)
        return best

    return SparseExtreme(*first_argmax(map_chunks(spec, worker, threads)))


def _reduce_min(spec: ModelClassSpec, score, threads: int) -> SparseExtreme:
    def worker(models: Iterator[ModelIndex]) -> Tuple[float, Optional[ModelIndex]]:
        best: Tuple[float, Optional[ModelIndex]] = (math.inf, None)
        for m in models:
            value = score(m)
            if value < best[0]:
                best = (value, m)
        return best

    return SparseExtreme(*first_argmin(map_chunks(spec, worker, threads)))


def rip(k: int, delta: SymmetricMatrix, threads: int = 1) -> SparseExtreme:
    """RIP(k, Delta): max over |M| = k of the operator norm of Delta(M)."""
    spec = _model_class(delta.dim, k, exact=True)

    def score(m: ModelIndex) -> float:
        lo, hi = eig_extremes(submatrix(delta, m))
        return max(abs(lo), abs(hi))

    return _reduce_max(spec, score, threads)


def sparse_max_eigen(k: int, a: SymmetricMatrix, threads: int = 1) -> SparseExtreme:
    """sup over k-sparse unit theta of thetaᵀ A theta."""
    spec = _model_class(a.dim, k, exact=True)
    return _reduce_max(spec, lambda m: eig_extremes(submatrix(a, m))[1], threads)


def lambda_sparse(k: int, a: SymmetricMatrix, threads: int = 1) -> SparseExtreme:
    """Lambda(k; A): min over |M| = k of lambda_min(A(M))."""
    spec = _model_class(a.dim, k, exact=True)
    return _reduce_min(spec, lambda m: eig_extremes(submatrix(a, m))[0], threads)


def dvec(k: int, dgamma: np.ndarray) -> SparseExtreme:
    """D(k, v): square root of the sum of the k largest squared entries."""
    v = as_vector(dgamma)
    if not 1 <= k <= v.size:
        raise InputError(f"need 1 <= k <= {v.size}, got k={k}")
    # stable sort on -|v| keeps lower indices first among ties
    order = np.argsort(-np.abs(v), kind="stable")[:k]
    chosen = tuple(sorted(int(i) for i in order))
    return SparseExtreme(float(np.sqrt(np.sum(v[order] ** 2))), chosen)


def strength(r: int, k: int, pair: RegressionPair, threads: int = 1) -> StrengthResult:
    """S_{r,k}: max over |M| <= k of ||beta_M||_r, skipping singular models."""
    if r not in (1, 2):
        raise InputError(f"strength defined for r in {{1, 2}}, got {r}")
    spec = _model_class(pair.p, k, exact=False)

    def worker(models: Iterator[ModelIndex]):
        best: Tuple[float, Optional[ModelIndex]] = (-math.inf, None)
        skipped: List[ModelIndex] = []
        for m in models:
            try:
                beta = beta_map(pair, m)
            except SingularModelError:
                skipped.append(m)
                continue
            value = float(np.sum(np.abs(beta))) if r == 1 else float(np.sqrt(beta @ beta))
            if value > best[0]:
                best = (value, m)
        return best, skipped

    partials = map_chunks(spec, worker, threads)
    value, model = first_argmax([best for best, _ in partials])
    skipped = [m for _, s in partials for m in s]
    if skipped:
        logger.warning(f"strength: skipped {len(skipped)} singular models")
    return StrengthResult(value if model is not None else 0.0, model, skipped)


def elementwise_bounds(k: int, delta: SymmetricMatrix, dgamma: np.ndarray) -> Tuple[float, float]:
    """(k |||Delta|||_inf, sqrt(k) ||dgamma||_inf), upper bounds for RIP and D."""
    v = as_vector(dgamma)
    return k * max_entry_norm(delta), math.sqrt(k) * float(np.max(np.abs(v)))


def strength_upper_bound(k: int, sigma_n: SymmetricMatrix, mean_y2: float) -> Tuple[float, float]:
    """Bounds on (S_{2,k}, S_{1,k}) from E[Y^2] and the sparse minimum eigenvalue."""
    lam = lambda_sparse(k, sigma_n).value
    if lam <= 0.0:
        raise DomainError(f"sparse minimum eigenvalue must be positive, got {lam:.3e}")
    if mean_y2 < 0.0:
        raise DomainError(f"mean of Y^2 must be nonnegative, got {mean_y2}")
    s2 = math.sqrt(mean_y2 / lam)
    return s2, math.sqrt(k) * s2


def _inverse_sqrt(a: SymmetricMatrix, model: ModelIndex) -> np.ndarray:
    decomposition = jacobi_eigh(a)
    values = decomposition.eigenvalues
    threshold = a.dim * 1e-12 * float(np.max(np.diag(a.values)))
    if values[0] <= threshold:
        raise SingularModelError(f"smallest eigenvalue {values[0]:.3e} not positive", model)
    vectors = decomposition.eigenvectors
    return (vectors / np.sqrt(values)) @ vectors.T


def relative_rip(k: int, sigma1: SymmetricMatrix, sigma2: SymmetricMatrix, threads: int = 1) -> SparseExtreme:
    """max over |M| <= k of ||Sigma2(M)^{-1/2} Sigma1(M) Sigma2(M)^{-1/2} - I||_op."""
    if sigma1.dim != sigma2.dim:
        raise InputError("relative RIP needs matrices of equal dimension")
    spec = _model_class(sigma1.dim, k, exact=False)

    def score(m: ModelIndex) -> float:
        w = _inverse_sqrt(submatrix(sigma2, m), m)
        inner = w @ submatrix(sigma1, m).values @ w - np.eye(len(m))
        lo, hi = eig_extremes(SymmetricMatrix.symmetrized(inner))
        return max(abs(lo), abs(hi))

    return _reduce_max(spec, score, threads)


class ErrorNormReport(BaseModel):
    """Uniform error norms between pair1 and pair2, with strengths of pair2."""

    model_config = ConfigDict(extra="forbid")

    k: int
    rip: float
    d: float
    lambda_k: float
    s2k: float
    s1k: float
    rip_model: Optional[Tuple[int, ...]] = None
    d_model: Optional[Tuple[int, ...]] = None
    lambda_model: Optional[Tuple[int, ...]] = None
    s2_model: Optional[Tuple[int, ...]] = None
    s1_model: Optional[Tuple[int, ...]] = None


def error_norm_report(k: int, pair1: RegressionPair, pair2: RegressionPair, threads: int = 1) -> ErrorNormReport:
    """
    Collect RIP, D, Lambda and strengths for a pair of pairs.

    Args:
        k: maximal model size
        pair1: e.g. the empirical pair
        pair2: e.g. the population pair

    Returns:
        ErrorNormReport
    """
    r = rip(k, pair1.sigma - pair2.sigma, threads)
    d = dvec(k, pair1.gamma - pair2.gamma)
    lam = lambda_sparse(k, pair2.sigma, threads)
    s2 = strength(2, k, pair2, threads)
    s1 = strength(1, k, pair2, threads)
    return ErrorNormReport(
        k=k,
        rip=r.value,
        d=d.value,
        lambda_k=lam.value,
        s2k=s2.value,
        s1k=s1.value,
        rip_model=r.model,
        d_model=d.model,
        lambda_model=lam.model,
        s2_model=s2.model,
        s1_model=s1.model,
    )
