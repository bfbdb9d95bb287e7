"""
Regression pairs (Sigma, Gamma), datasets and the per-model linear regression map.
"""
import logging
from typing import Dict, Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from verifiers.errors import InputError, SingularModelError
from verifiers.linalg_core import ModelIndex, SymmetricMatrix, as_model, as_vector, solve_spd, submatrix
from verifiers.model_space import ModelClassSpec, enumerate_models, map_chunks

logger = logging.getLogger(__name__)


class Dataset:
    """n x p design with a length-n response.

    When ``intercept`` is set, column 0 must be the all-ones column.
    """

    def __init__(self, x: Union[np.ndarray, Sequence[Sequence[float]]], y: Union[np.ndarray, Sequence[float]], intercept: bool = False):
        x = np.array(x, dtype=float)
        y = np.array(y, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise InputError(f"design must be a nonempty n x p array, got shape {x.shape}")
        if y.ndim != 1 or y.size != x.shape[0]:
            raise InputError(f"response length {y.size} does not match n={x.shape[0]}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InputError("dataset entries must be finite")
        if intercept and not np.all(x[:, 0] == 1.0):
            raise InputError("intercept flag set but column 0 is not all ones")
        x.flags.writeable = False
        y.flags.writeable = False
        self.x = x
        self.y = y
        self.intercept = intercept

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def with_intercept(self) -> "Dataset":
        """Prepend a column of ones as covariate 0."""
        if self.intercept:
            return self
        return Dataset(np.column_stack([np.ones(self.n), self.x]), self.y, intercept=True)

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, p={self.p}, intercept={self.intercept})"


class RegressionPair:
    """A (Sigma, Gamma) pair feeding the linear regression map."""

    __slots__ = ("sigma", "gamma")

    def __init__(self, sigma: Union[SymmetricMatrix, np.ndarray], gamma: Union[np.ndarray, Sequence[float]]):
        self.sigma = sigma if isinstance(sigma, SymmetricMatrix) else SymmetricMatrix(sigma)
        self.gamma = as_vector(gamma, self.sigma.dim)
        self.gamma.flags.writeable = False

    @property
    def p(self) -> int:
        return self.sigma.dim

    def scaled(self, c: float) -> "RegressionPair":
        return RegressionPair(self.sigma * c, self.gamma * c)

    def __repr__(self) -> str:
        return f"RegressionPair(p={self.p})"


class ModelFit(NamedTuple):
    beta: Optional[np.ndarray]
    status: str
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def empirical_pair(d: Dataset) -> RegressionPair:
    """(1/n) sum X_i X_iᵀ and (1/n) sum X_i Y_i."""
    sigma = SymmetricMatrix.symmetrized(d.x.T @ d.x / d.n)
    gamma = d.x.T @ d.y / d.n
    return RegressionPair(sigma, gamma)


def beta_map(pair: RegressionPair, model: Sequence[int]) -> np.ndarray:
    """beta_M(Sigma, Gamma) = Sigma(M)^{-1} Gamma(M).

    Raises:
        SingularModelError: Sigma(M) fails the pivot test
    """
    m = as_model(model, pair.p)
    return solve_spd(submatrix(pair.sigma, m), pair.gamma[list(m)], model=m)


def fit_all(pair: RegressionPair, k: int, threads: int = 1) -> Dict[ModelIndex, ModelFit]:
    """
    Fit every model of size <= k.

    Args:
        pair: regression pair
        k: maximal model size
        threads: worker count for the chunked enumeration

    Returns:
        Ordered mapping model -> ModelFit; singular models carry status "singular"
    """
    spec = ModelClassSpec(p=pair.p, k=k)

    def worker(models: Iterator[ModelIndex]) -> Dict[ModelIndex, ModelFit]:
        out: Dict[ModelIndex, ModelFit] = {}
        for m in models:
            try:
                out[m] = ModelFit(beta_map(pair, m), "ok")
            except SingularModelError as e:
                out[m] = ModelFit(None, "singular", str(e))
        return out

    fits: Dict[ModelIndex, ModelFit] = {}
    for part in map_chunks(spec, worker, threads):
        fits.update(part)
    singular = sum(1 for f in fits.values() if not f.ok)
    if singular:
        logger.warning(f"{singular} of {len(fits)} models singular")
    return fits


def centered_pair(d: Dataset) -> RegressionPair:
    """Sample-centered gram and cross-moment."""
    if d.n < 2:
        raise InputError("centered pair needs n >= 2")
    xc = d.x - d.x.mean(axis=0)
    yc = d.y - d.y.mean()
    return RegressionPair(SymmetricMatrix.symmetrized(xc.T @ xc / d.n), xc.T @ yc / d.n)


def noise_corrected_pair(dz: Dataset, sigma_w: SymmetricMatrix) -> RegressionPair:
    """Gram of noisy covariates Z = X + W minus the known noise covariance.

    The result may be indefinite; beta_map on it can legitimately fail.
    """
    if sigma_w.dim != dz.p:
        raise InputError(f"noise covariance dim {sigma_w.dim} does not match p={dz.p}")
    pair = empirical_pair(dz)
    return RegressionPair(pair.sigma - sigma_w, pair.gamma)


def lin_rep_term(d: Dataset, sigma_n: SymmetricMatrix, beta_nm: np.ndarray, model: Sequence[int]) -> np.ndarray:
    """(1/n) sum Sigma_n(M)^{-1} X_i(M) (Y_i - X_i(M)ᵀ beta_{n,M})."""
    m = as_model(model, d.p)
    xm = d.x[:, list(m)]
    beta = as_vector(beta_nm, len(m))
    residual = d.y - xm @ beta
    return solve_spd(submatrix(sigma_n, m), xm.T @ residual / d.n, model=m)


def rep_error(pair1: RegressionPair, pair2: RegressionPair, model: Sequence[int]) -> np.ndarray:
    """beta_M(1) - beta_M(2) - Sigma2(M)^{-1}(Gamma1(M) - Sigma1(M) beta_M(2)).

    With pair1 empirical and pair2 population this is the linear
    representation error vector.
    """
    m = as_model(model, pair1.p)
    idx = list(m)
    beta1 = beta_map(pair1, m)
    beta2 = beta_map(pair2, m)
    influence = pair1.gamma[idx] - pair1.sigma.values[np.ix_(idx, idx)] @ beta2
    return beta1 - beta2 - solve_spd(submatrix(pair2.sigma, m), influence, model=m)
