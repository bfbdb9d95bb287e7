"""
Reproducible data generators: independent sub-Weibull designs and causal
moving-average processes with coupled replay.
"""
import logging
import math
from typing import List, Literal, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from verifiers.errors import ConfigError, InputError
from verifiers.linalg_core import SymmetricMatrix
from verifiers.regression_core import Dataset, RegressionPair

from .rng import stream

logger = logging.getLogger(__name__)

POPULATION_CHUNK_ENTRIES = 2_000_000


class DesignLaw(BaseModel):
    """Law of the random design columns."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["gaussian", "subweibull", "rademacher"] = "gaussian"
    cov: Optional[List[List[float]]] = None
    rho: float = 0.0
    alpha: float = 2.0
    scale: float = 1.0

    @model_validator(mode="after")
    def _check(self) -> "DesignLaw":
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        return self


class ResponseLink(BaseModel):
    """mu(x) = betaᵀx + quad_coef * x[i] * x[j], passed through the family's link."""

    model_config = ConfigDict(extra="forbid")

    family: Literal["gaussian", "logistic", "poisson"] = "gaussian"
    beta: Optional[List[float]] = None
    quad_coef: float = 0.5
    quad_pair: Tuple[int, int] = (0, 0)

    def coefficients(self, p: int) -> np.ndarray:
        if self.beta is None:
            return 1.0 / np.arange(1, p + 1)
        if len(self.beta) != p:
            raise ConfigError(f"response beta has length {len(self.beta)}, expected {p}")
        return np.asarray(self.beta, dtype=float)

    def mean(self, x: np.ndarray) -> np.ndarray:
        i, j = self.quad_pair
        return x @ self.coefficients(x.shape[1]) + self.quad_coef * x[:, i] * x[:, j]


class NoiseLaw(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["gaussian", "none"] = "gaussian"
    sd: float = 1.0


class IndepSpec(BaseModel):
    """Independent rows. ``p`` counts all columns, including the intercept."""

    model_config = ConfigDict(extra="forbid")

    p: int
    intercept: bool = False
    design: DesignLaw = Field(default_factory=DesignLaw)
    response: ResponseLink = Field(default_factory=ResponseLink)
    noise: NoiseLaw = Field(default_factory=NoiseLaw)

    @model_validator(mode="after")
    def _check(self) -> "IndepSpec":
        q = self.random_columns
        if q < 1:
            raise ValueError("need at least one random design column")
        if max(self.response.quad_pair) >= self.p or min(self.response.quad_pair) < 0:
            raise ValueError(f"quad_pair {self.response.quad_pair} out of range for p={self.p}")
        if self.response.beta is not None and len(self.response.beta) != self.p:
            raise ValueError(f"beta must have length p={self.p}")
        if self.design.cov is not None:
            cov = np.asarray(self.design.cov, dtype=float)
            if cov.shape != (q, q):
                raise ValueError(f"design covariance must be {q} x {q}")
            if not np.allclose(cov, cov.T):
                raise ValueError("design covariance must be symmetric")
            if np.min(np.linalg.eigvalsh(cov)) <= 0:
                raise ValueError("design covariance must be positive definite")
        return self

    @property
    def random_columns(self) -> int:
        return self.p - (1 if self.intercept else 0)

    def design_covariance(self) -> np.ndarray:
        """Covariance of the random columns (gaussian law)."""
        if self.design.cov is not None:
            return np.asarray(self.design.cov, dtype=float)
        q = self.random_columns
        lags = np.abs(np.subtract.outer(np.arange(q), np.arange(q)))
        return self.design.rho ** lags


class CoefficientLaw(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["geometric", "polynomial"] = "geometric"
    rho: float = 0.5
    nu: float = 1.0

    @model_validator(mode="after")
    def _check(self) -> "CoefficientLaw":
        if self.kind == "geometric" and not 0.0 <= self.rho < 1.0:
            raise ValueError(f"geometric rho must lie in [0, 1), got {self.rho}")
        if self.kind == "polynomial" and self.nu <= 0:
            raise ValueError(f"polynomial nu must be positive, got {self.nu}")
        return self


class InnovationLaw(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["gaussian", "subweibull", "rademacher"] = "gaussian"
    alpha: float = 2.0
    scale: float = 1.0

    @property
    def variance(self) -> float:
        if self.kind == "subweibull":
            return self.scale ** 2 * math.gamma(1.0 + 2.0 / self.alpha)
        return self.scale ** 2


class CausalSpec(BaseModel):
    """W_i = (X_i, Y_i) with X_i = f_i sum_s a_s A eps_{i-s} and Y_i = mu(X_i) + sd * eps_i[p]."""

    model_config = ConfigDict(extra="forbid")

    p: int
    coefficients: CoefficientLaw = Field(default_factory=CoefficientLaw)
    horizon: Optional[int] = None
    tail_tol: float = 1e-6
    max_horizon: int = 100_000
    mixing: Optional[List[List[float]]] = None
    innovation: InnovationLaw = Field(default_factory=InnovationLaw)
    response: ResponseLink = Field(default_factory=ResponseLink)
    response_sd: float = 1.0
    switch_at: Optional[int] = None
    switch_scale: float = 1.0

    @model_validator(mode="after")
    def _check(self) -> "CausalSpec":
        if self.p < 1:
            raise ValueError("p must be positive")
        if self.response.family != "gaussian":
            raise ValueError("causal specs support the gaussian response family only")
        if self.mixing is not None and np.asarray(self.mixing).shape != (self.p, self.p + 1):
            raise ValueError(f"mixing matrix must be {self.p} x {self.p + 1}")
        if self.horizon is not None and self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if max(self.response.quad_pair) >= self.p:
            raise ValueError("quad_pair out of range")
        return self

    def mixing_matrix(self) -> np.ndarray:
        if self.mixing is None:
            return np.hstack([np.eye(self.p), np.zeros((self.p, 1))])
        return np.asarray(self.mixing, dtype=float)

    def resolved_horizon(self) -> int:
        """S: explicit, or the smallest horizon whose tail is below tail_tol of the total mass."""
        if self.horizon is not None:
            return self.horizon
        law = self.coefficients
        if law.kind == "geometric":
            if law.rho == 0.0:
                return 0
            s = max(0, math.ceil(math.log(self.tail_tol) / math.log(law.rho)) - 1)
        else:
            # tail sum_{s>S} (s+1)^{-(nu+1)} <= (S+1)^{-nu} / nu, total mass >= 1
            s = max(0, math.ceil((1.0 / (law.nu * self.tail_tol)) ** (1.0 / law.nu)) - 1)
        if s > self.max_horizon:
            raise ConfigError(f"horizon {s} needed for tail_tol={self.tail_tol} exceeds max_horizon={self.max_horizon}")
        return s

    def coefficient_array(self) -> np.ndarray:
        s = np.arange(self.resolved_horizon() + 1, dtype=float)
        if self.coefficients.kind == "geometric":
            return self.coefficients.rho ** s
        return (s + 1.0) ** (-(self.coefficients.nu + 1.0))

    def truncation(self) -> float:
        """Certified upper bound on the omitted coefficient mass relative to the total."""
        a = self.coefficient_array()
        horizon = a.size - 1
        if self.coefficients.kind == "geometric":
            return self.coefficients.rho ** (horizon + 1)
        nu = self.coefficients.nu
        return (horizon + 1.0) ** (-nu) / nu / float(np.sum(a))

    def regime_scales(self, n: int) -> np.ndarray:
        scales = np.ones(n)
        if self.switch_at is not None and self.switch_at < n:
            scales[max(self.switch_at, 0):] = self.switch_scale
        return scales


class InnovationTape(BaseModel):
    """Innovations eps_{-S..n-1} (row t holds eps_{t-S}) plus independent replacements."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    innovations: np.ndarray
    replacements: np.ndarray
    seed: int
    horizon: int

    @property
    def n(self) -> int:
        return self.innovations.shape[0] - self.horizon


class PopulationPair(NamedTuple):
    pair: RegressionPair
    mean_y2: float
    provenance: str
    sigma_stderr: Optional[np.ndarray] = None
    gamma_stderr: Optional[np.ndarray] = None
    mean_y2_stderr: Optional[float] = None


def draw_law(rng: np.random.Generator, kind: str, shape: Tuple[int, ...], alpha: float = 2.0, scale: float = 1.0) -> np.ndarray:
    """Symmetric draws: gaussian, sign * E^{1/alpha} (E standard exponential), or Rademacher."""
    if kind == "gaussian":
        return scale * rng.standard_normal(shape)
    sign = rng.choice(np.array([-1.0, 1.0]), size=shape)
    if kind == "rademacher":
        return scale * sign
    if kind == "subweibull":
        return scale * sign * rng.standard_exponential(shape) ** (1.0 / alpha)
    raise InputError(f"unknown law {kind}")


def _respond(rng: np.random.Generator, link: ResponseLink, mu: np.ndarray, noise: NoiseLaw) -> np.ndarray:
    if link.family == "logistic":
        return (rng.random(mu.size) < 1.0 / (1.0 + np.exp(-mu))).astype(float)
    if link.family == "poisson":
        return rng.poisson(np.exp(mu)).astype(float)
    if noise.kind == "none":
        return mu.copy()
    return mu + noise.sd * rng.standard_normal(mu.size)


def gen_independent(spec: IndepSpec, n: int, seed: int, *labels) -> Dataset:
    """
    Draw n independent rows.

    Args:
        spec: generator specification
        n: number of rows
        seed: user seed
        labels: extra stream labels (e.g. rep id) so datasets do not share streams

    Returns:
        Dataset, intercept column first when requested
    """
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    design_rng = stream(seed, "design", n, *labels)
    response_rng = stream(seed, "response", n, *labels)
    q = spec.random_columns
    law = spec.design
    if law.kind == "gaussian":
        factor = np.linalg.cholesky(spec.design_covariance())
        z = design_rng.standard_normal((n, q)) @ factor.T * law.scale
    else:
        z = draw_law(design_rng, law.kind, (n, q), law.alpha, law.scale)
    x = np.column_stack([np.ones(n), z]) if spec.intercept else z
    y = _respond(response_rng, spec.response, spec.response.mean(x), spec.noise)
    return Dataset(x, y, intercept=spec.intercept)


def causal_values(spec: CausalSpec, windows: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """W = (X, Y) for a batch of innovation windows.

    windows[r, s] holds eps_{i-s} for s = 0..S; returns an array of shape (reps, p + 1).
    """
    a = spec.coefficient_array()
    loading = spec.mixing_matrix()
    x = scale * np.einsum("s,rsq->rq", a, windows @ loading.T)
    y = spec.response.mean(x) + spec.response_sd * windows[:, 0, spec.p]
    return np.column_stack([x, y])


def _assemble(spec: CausalSpec, innovations: np.ndarray) -> Dataset:
    a = spec.coefficient_array()
    horizon = a.size - 1
    n = innovations.shape[0] - horizon
    loaded = innovations @ spec.mixing_matrix().T
    x = np.zeros((n, spec.p))
    for s, coef in enumerate(a):
        x += coef * loaded[horizon - s: horizon - s + n]
    x *= spec.regime_scales(n)[:, None]
    y = spec.response.mean(x) + spec.response_sd * innovations[horizon:, spec.p]
    return Dataset(x, y)


def gen_causal(spec: CausalSpec, n: int, seed: int, *labels) -> Tuple[Dataset, InnovationTape]:
    """Draw n consecutive observations after a burn-in of S innovations."""
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    horizon = spec.resolved_horizon()
    law = spec.innovation
    innovations = draw_law(stream(seed, "innovations", n, *labels), law.kind, (n + horizon, spec.p + 1), law.alpha, law.scale)
    replacements = draw_law(stream(seed, "replacements", n, *labels), law.kind, (n + horizon, spec.p + 1), law.alpha, law.scale)
    tape = InnovationTape(innovations=innovations, replacements=replacements, seed=seed, horizon=horizon)
    return _assemble(spec, innovations), tape


def replay(spec: CausalSpec, tape: InnovationTape) -> Dataset:
    """Rebuild the dataset from a recorded tape."""
    return _assemble(spec, tape.innovations)


def replay_coupled(spec: CausalSpec, tape: InnovationTape, i: int, s: int) -> np.ndarray:
    """W_{i,s}: observation i recomputed with eps_{i-s} replaced by its recorded copy."""
    if not 0 <= i < tape.n:
        raise InputError(f"index {i} outside 0..{tape.n - 1}")
    innovations = np.array(tape.innovations)
    row = tape.horizon + i - s
    if 0 <= s <= tape.horizon:
        innovations[row] = tape.replacements[row]
    window = innovations[tape.horizon + i - np.arange(tape.horizon + 1)]
    scale = spec.regime_scales(tape.n)[i]
    return causal_values(spec, window[None, :, :], scale)[0]


def _gaussian_moments(
    mean: np.ndarray, cov: np.ndarray, kappa: np.ndarray, tau2: float, link: ResponseLink
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Second moments of (X, Y) for jointly Gaussian X and noise eta, Y = mu(X) + eta.

    kappa = E[X eta], tau2 = E[eta^2], E[eta] = 0.
    """
    b = link.coefficients(mean.size)
    c = link.quad_coef
    i, j = link.quad_pair
    sigma = cov + np.outer(mean, mean)
    # E[X_a X_i X_j]
    third = mean * cov[i, j] + mean[i] * cov[:, j] + mean[j] * cov[:, i] + mean * mean[i] * mean[j]
    fourth = (
        cov[i, i] * cov[j, j] + 2.0 * cov[i, j] ** 2
        + mean[i] ** 2 * cov[j, j] + mean[j] ** 2 * cov[i, i] + 4.0 * mean[i] * mean[j] * cov[i, j]
        + mean[i] ** 2 * mean[j] ** 2
    )
    gamma = sigma @ b + c * third + kappa
    mean_y2 = float(
        b @ sigma @ b + 2.0 * c * (b @ third) + c ** 2 * fourth + tau2
        + 2.0 * (b @ kappa) + 2.0 * c * (mean[i] * kappa[j] + mean[j] * kappa[i])
    )
    return sigma, gamma, mean_y2


def _independent_closed_form(spec: IndepSpec) -> Tuple[np.ndarray, np.ndarray, float]:
    q = spec.random_columns
    cov_random = spec.design_covariance() * spec.design.scale ** 2
    cov = np.zeros((spec.p, spec.p))
    mean = np.zeros(spec.p)
    offset = spec.p - q
    cov[offset:, offset:] = cov_random
    if spec.intercept:
        mean[0] = 1.0
    tau2 = spec.noise.sd ** 2 if spec.noise.kind == "gaussian" else 0.0
    return _gaussian_moments(mean, cov, np.zeros(spec.p), tau2, spec.response)


def _causal_closed_form(spec: CausalSpec, n: Optional[int]) -> Tuple[np.ndarray, np.ndarray, float]:
    a = spec.coefficient_array()
    loading = spec.mixing_matrix()
    var = spec.innovation.variance
    base_cov = float(np.sum(a ** 2)) * var * loading @ loading.T
    base_kappa = a[0] * spec.response_sd * var * loading[:, spec.p]
    tau2 = spec.response_sd ** 2 * var
    regimes = [(1.0, 1.0)]
    if spec.switch_at is not None:
        if n is None:
            raise InputError("two-regime specs need n for the population pair")
        weight = min(max(spec.switch_at, 0), n) / n
        regimes = [(1.0, weight), (spec.switch_scale, 1.0 - weight)]
    sigma = np.zeros((spec.p, spec.p))
    gamma = np.zeros(spec.p)
    mean_y2 = 0.0
    zero = np.zeros(spec.p)
    for f, w in regimes:
        if w == 0.0:
            continue
        s_f, g_f, y_f = _gaussian_moments(zero, f * f * base_cov, f * base_kappa, tau2, spec.response)
        sigma += w * s_f
        gamma += w * g_f
        mean_y2 += w * y_f
    return sigma, gamma, mean_y2


def _monte_carlo_pair(sample: Dataset) -> PopulationPair:
    n, p = sample.x.shape
    sum_s = np.zeros((p, p))
    sum_s2 = np.zeros((p, p))
    sum_g = np.zeros(p)
    sum_g2 = np.zeros(p)
    sum_y2 = 0.0
    sum_y4 = 0.0
    chunk = max(1000, POPULATION_CHUNK_ENTRIES // (p * p))
    for start in range(0, n, chunk):
        x = sample.x[start:start + chunk]
        y = sample.y[start:start + chunk]
        outer = x[:, :, None] * x[:, None, :]
        sum_s += outer.sum(axis=0)
        sum_s2 += (outer ** 2).sum(axis=0)
        cross = x * y[:, None]
        sum_g += cross.sum(axis=0)
        sum_g2 += (cross ** 2).sum(axis=0)
        sum_y2 += float(y @ y)
        sum_y4 += float(np.sum(y ** 4))
    sigma = sum_s / n
    gamma = sum_g / n
    mean_y2 = sum_y2 / n

    def stderr(total_sq, mean):
        return np.sqrt(np.maximum(total_sq / n - mean ** 2, 0.0) / n)

    return PopulationPair(
        pair=RegressionPair(SymmetricMatrix.symmetrized(sigma), gamma),
        mean_y2=mean_y2,
        provenance=f"monte_carlo({n})",
        sigma_stderr=stderr(sum_s2, sigma),
        gamma_stderr=stderr(sum_g2, gamma),
        mean_y2_stderr=float(stderr(sum_y4, mean_y2)),
    )


def population_pair(spec, n: Optional[int] = None, seed: int = 0, draws: int = 1_000_000) -> PopulationPair:
    """
    Population (Sigma_n, Gamma_n) and E[Y^2].

    Closed form for Gaussian designs (or Gaussian innovations) with the gaussian
    response family; otherwise one large Monte Carlo run with entrywise stderr.

    Args:
        spec: IndepSpec or CausalSpec
        n: sample size (needed only for two-regime causal specs)
        seed: seed for the Monte Carlo path
        draws: Monte Carlo size

    Returns:
        PopulationPair
    """
    if isinstance(spec, IndepSpec):
        if spec.design.kind == "gaussian" and spec.response.family == "gaussian":
            sigma, gamma, mean_y2 = _independent_closed_form(spec)
            return PopulationPair(RegressionPair(SymmetricMatrix.symmetrized(sigma), gamma), mean_y2, "closed_form")
        logger.info(f"population pair by Monte Carlo with {draws} draws")
        return _monte_carlo_pair(gen_independent(spec, draws, seed, "population"))
    if isinstance(spec, CausalSpec):
        if spec.innovation.kind == "gaussian":
            sigma, gamma, mean_y2 = _causal_closed_form(spec, n)
            return PopulationPair(RegressionPair(SymmetricMatrix.symmetrized(sigma), gamma), mean_y2, "closed_form")
        mc_spec = spec
        if spec.switch_at is not None:
            if n is None:
                raise InputError("two-regime specs need n for the population pair")
            mc_spec = spec.model_copy(update={"switch_at": int(round(spec.switch_at * draws / n))})
        logger.info(f"population pair by Monte Carlo path of length {draws}")
        sample, _ = gen_causal(mc_spec, draws, seed, "population")
        return _monte_carlo_pair(sample)
    raise InputError(f"unsupported spec type {type(spec).__name__}")


def stationary_mean(spec: CausalSpec, j: int, scale: float = 1.0) -> float:
    """E[W(j)] in the regime with output scale ``scale``; X coordinates are centered."""
    if not 0 <= j <= spec.p:
        raise InputError(f"coordinate {j} outside 0..{spec.p}")
    if j < spec.p:
        return 0.0
    a = spec.coefficient_array()
    loading = spec.mixing_matrix()
    cov = scale ** 2 * float(np.sum(a ** 2)) * spec.innovation.variance * loading @ loading.T
    i, l = spec.response.quad_pair
    return float(spec.response.quad_coef * cov[i, l])


def lag_autocovariance(spec: CausalSpec, j: int, lag: int) -> float:
    """Cov(X_i(j), X_{i+lag}(j)) of the stationary covariate process."""
    a = spec.coefficient_array()
    row = spec.mixing_matrix()[j]
    if lag >= a.size:
        return 0.0
    return float(np.sum(a[: a.size - lag] * a[lag:])) * spec.innovation.variance * float(row @ row)
