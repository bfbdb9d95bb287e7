"""
Functional dependence measures by coupled replay, dependence-adjusted norms,
and statistical checks of the dependence inequalities.
"""
import logging
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from verifiers.data_gen import CausalSpec, causal_values, draw_law, stationary_mean, stream
from verifiers.errors import InputError

logger = logging.getLogger(__name__)

MIN_REPS = 1000
SLACK_STDERR = 4.0
DEFAULT_R_GRID = (2.0, 3.0, 4.0, 6.0, 8.0)


class Estimate(NamedTuple):
    value: float
    stderr: float


class Constant(NamedTuple):
    """Deterministic factor in a product process."""

    value: float


Factor = Union[int, Constant]


def _regimes(spec: CausalSpec) -> List[float]:
    if spec.switch_at is None or spec.switch_scale == 1.0:
        return [1.0]
    return [1.0, spec.switch_scale]


def _coupled_batch(
    spec: CausalSpec, s: int, reps: int, seed: int, regime: int, scale: float, coupling: str = "independent"
) -> Tuple[np.ndarray, np.ndarray]:
    """(W_i, W_{i,s}) for ``reps`` independent windows; shapes (reps, p + 1)."""
    horizon = spec.resolved_horizon()
    law = spec.innovation
    windows = draw_law(stream(seed, "delta", s, regime), law.kind, (reps, horizon + 1, spec.p + 1), law.alpha, law.scale)
    coupled = windows.copy()
    if coupling == "independent":
        coupled[:, s] = draw_law(stream(seed, "delta-copy", s, regime), law.kind, (reps, spec.p + 1), law.alpha, law.scale)
    elif coupling != "identical":
        raise InputError(f"unknown coupling {coupling}")
    return causal_values(spec, windows, scale), causal_values(spec, coupled, scale)


def _moment_norm(values: np.ndarray, r: float) -> Estimate:
    """(mean |v|^r)^{1/r} with a delta-method stderr."""
    powered = np.abs(values) ** r
    m = float(np.mean(powered))
    if m == 0.0:
        return Estimate(0.0, 0.0)
    se_m = float(np.std(powered, ddof=1)) / math.sqrt(powered.size) if powered.size > 1 else 0.0
    return Estimate(m ** (1.0 / r), (1.0 / r) * m ** (1.0 / r - 1.0) * se_m)


def estimate_delta(
    spec: CausalSpec, s: int, r: float, j: int, reps: int, seed: int, coupling: str = "independent"
) -> Estimate:
    """
    Estimate delta_{s,r,j} = ||W_i(j) - W_{i,s}(j)||_r.

    Args:
        spec: causal process
        s: lag of the swapped innovation
        r: moment order (>= 1)
        j: coordinate, 0..p-1 for X and p for Y
        reps: number of coupled pairs (>= 1000)
        seed: seed
        coupling: "independent" swaps in a fresh copy, "identical" swaps in the same value

    Returns:
        Estimate(value, stderr); the two-regime spec reports the larger regime
    """
    if reps < MIN_REPS:
        raise InputError(f"need at least {MIN_REPS} replications, got {reps}")
    if r < 1:
        raise InputError(f"r must be >= 1, got {r}")
    if not 0 <= j <= spec.p:
        raise InputError(f"coordinate {j} outside 0..{spec.p}")
    if s < 0:
        raise InputError(f"lag must be nonnegative, got {s}")
    if s > spec.resolved_horizon():
        return Estimate(0.0, 0.0)
    best = Estimate(0.0, 0.0)
    for regime, scale in enumerate(_regimes(spec)):
        w, wc = _coupled_batch(spec, s, reps, seed, regime, scale, coupling)
        est = _moment_norm(w[:, j] - wc[:, j], r)
        if est.value > best.value:
            best = est
    return best


def _tail_sums(values: np.ndarray) -> np.ndarray:
    """Delta_m = sum_{s >= m} delta_s, accumulated from the end."""
    return np.cumsum(values[::-1])[::-1]


def _adjusted(deltas: np.ndarray, errors: np.ndarray, nu: float) -> Estimate:
    """sup_m (m+1)^nu Delta_m with the stderr at the maximizing m."""
    tails = _tail_sums(deltas)
    tail_errors = np.sqrt(_tail_sums(errors ** 2))
    weights = (np.arange(deltas.size) + 1.0) ** nu
    weighted = weights * tails
    m = int(np.argmax(weighted))
    return Estimate(float(weighted[m]), float(weights[m] * tail_errors[m]))


class DependenceProfile:
    """Coupled-distance estimates and the norms built from them.

    delta[(s, r, j)] and Delta[(m, r, j)] hold Estimates; Delta is the exact
    tail sum of delta over s = m..S. adjusted[(r, nu, j)] and
    psi[(alpha, nu, j)] are filled by ``adjusted_norms``.
    """

    def __init__(self, spec: CausalSpec, r_grid: Sequence[float], coords: Sequence[int]):
        self.spec = spec
        self.r_grid = tuple(float(r) for r in r_grid)
        self.coords = tuple(int(j) for j in coords)
        self.horizon = spec.resolved_horizon()
        self.truncation = spec.truncation()
        self.delta: Dict[Tuple[int, float, int], Estimate] = {}
        self.Delta: Dict[Tuple[int, float, int], Estimate] = {}
        self.adjusted: Dict[Tuple[float, float, int], Estimate] = {}
        self.psi: Dict[Tuple[float, float, int], Estimate] = {}

    def deltas(self, r: float, j: int) -> Tuple[np.ndarray, np.ndarray]:
        est = [self.delta[(s, float(r), j)] for s in range(self.horizon + 1)]
        return np.array([e.value for e in est]), np.array([e.stderr for e in est])

    def fill_tails(self) -> None:
        for r in self.r_grid:
            for j in self.coords:
                values, errors = self.deltas(r, j)
                tails = _tail_sums(values)
                tail_errors = np.sqrt(_tail_sums(errors ** 2))
                for m in range(self.horizon + 1):
                    self.Delta[(m, r, j)] = Estimate(float(tails[m]), float(tail_errors[m]))

    def max_adjusted(self, r: float, nu: float, coords: Optional[Sequence[int]] = None) -> Estimate:
        """max over coordinates of ||{W(j)}||_{r,nu}."""
        coords = self.coords if coords is None else coords
        return max((self.adjusted[(float(r), float(nu), j)] for j in coords), key=lambda e: e.value)

    def delta_frame(self) -> pd.DataFrame:
        rows = [{"s": s, "r": r, "j": j, "delta": e.value, "stderr": e.stderr} for (s, r, j), e in sorted(self.delta.items())]
        return pd.DataFrame(rows, columns=["s", "r", "j", "delta", "stderr"])

    def tail_frame(self) -> pd.DataFrame:
        rows = [{"m": m, "r": r, "j": j, "Delta": e.value, "stderr": e.stderr} for (m, r, j), e in sorted(self.Delta.items())]
        return pd.DataFrame(rows, columns=["m", "r", "j", "Delta", "stderr"])

    def norm_frame(self) -> pd.DataFrame:
        rows = [{"norm": "adjusted", "order": r, "nu": nu, "j": j, "value": e.value, "stderr": e.stderr}
                for (r, nu, j), e in sorted(self.adjusted.items())]
        rows += [{"norm": "psi", "order": a, "nu": nu, "j": j, "value": e.value, "stderr": e.stderr}
                 for (a, nu, j), e in sorted(self.psi.items())]
        return pd.DataFrame(rows, columns=["norm", "order", "nu", "j", "value", "stderr"])


def build_profile(
    spec: CausalSpec,
    r_grid: Sequence[float] = DEFAULT_R_GRID,
    coords: Optional[Sequence[int]] = None,
    reps: int = 2000,
    seed: int = 0,
) -> DependenceProfile:
    """Monte Carlo profile; shares its streams with ``estimate_delta`` so entries agree exactly."""
    if reps < MIN_REPS:
        raise InputError(f"need at least {MIN_REPS} replications, got {reps}")
    coords = list(range(spec.p + 1)) if coords is None else list(coords)
    profile = DependenceProfile(spec, r_grid, coords)
    for s in range(profile.horizon + 1):
        batches = [_coupled_batch(spec, s, reps, seed, regime, scale) for regime, scale in enumerate(_regimes(spec))]
        for r in profile.r_grid:
            for j in profile.coords:
                best = Estimate(0.0, 0.0)
                for w, wc in batches:
                    est = _moment_norm(w[:, j] - wc[:, j], r)
                    if est.value > best.value:
                        best = est
                profile.delta[(s, r, j)] = best
    profile.fill_tails()
    logger.info(f"dependence profile: S={profile.horizon}, {len(profile.delta)} delta entries")
    return profile


def gaussian_abs_moment(r: float) -> float:
    """E|Z|^r for standard normal Z."""
    return 2.0 ** (r / 2.0) * math.gamma((r + 1.0) / 2.0) / math.sqrt(math.pi)


def analytic_profile(spec: CausalSpec, r_grid: Sequence[float] = DEFAULT_R_GRID, coords: Optional[Sequence[int]] = None) -> DependenceProfile:
    """Exact profile of covariate coordinates for Gaussian innovations.

    delta_{s,r,j} = |a_s| ||A_j|| sqrt(2) sd (E|Z|^r)^{1/r}, with the larger regime scale.
    """
    if spec.innovation.kind != "gaussian":
        raise InputError("analytic profile needs gaussian innovations")
    coords = list(range(spec.p)) if coords is None else list(coords)
    if any(not 0 <= j < spec.p for j in coords):
        raise InputError("analytic profile covers covariate coordinates only")
    profile = DependenceProfile(spec, r_grid, coords)
    a = spec.coefficient_array()
    rows = np.linalg.norm(spec.mixing_matrix(), axis=1)
    scale = max(abs(f) for f in _regimes(spec))
    for r in profile.r_grid:
        factor = math.sqrt(2.0) * spec.innovation.scale * gaussian_abs_moment(r) ** (1.0 / r) * scale
        for j in coords:
            for s in range(profile.horizon + 1):
                profile.delta[(s, r, j)] = Estimate(float(abs(a[s]) * rows[j] * factor), 0.0)
    profile.fill_tails()
    return profile


def adjusted_norms(profile: DependenceProfile, nu_grid: Sequence[float], alpha_grid: Sequence[float] = ()) -> DependenceProfile:
    """
    Fill dependence-adjusted norms and their psi_alpha versions.

    Args:
        profile: profile with r = 2 and r = 4 on its grid
        nu_grid: decay exponents
        alpha_grid: tail orders for sup_{r >= 2} r^{-1/alpha} ||.||_{r,nu} over the finite r-grid

    Returns:
        The same profile, filled
    """
    for needed in (2.0, 4.0):
        if needed not in profile.r_grid:
            raise InputError(f"profile r-grid {profile.r_grid} lacks r={needed:g}")
    for nu in nu_grid:
        if nu < 0:
            raise InputError(f"nu must be nonnegative, got {nu}")
        for r in profile.r_grid:
            for j in profile.coords:
                values, errors = profile.deltas(r, j)
                profile.adjusted[(r, float(nu), j)] = _adjusted(values, errors, nu)
        for alpha in alpha_grid:
            for j in profile.coords:
                candidates = [
                    Estimate(r ** (-1.0 / alpha) * profile.adjusted[(r, float(nu), j)].value,
                             r ** (-1.0 / alpha) * profile.adjusted[(r, float(nu), j)].stderr)
                    for r in profile.r_grid if r >= 2.0
                ]
                profile.psi[(float(alpha), float(nu), j)] = max(candidates, key=lambda e: e.value)
    return profile


class DependenceCheckRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    item: str
    lhs: float
    rhs: float
    stderr: float
    holds: bool


class DependenceCheckReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    check: str
    rows: List[DependenceCheckRow] = Field(default_factory=list)
    quantities: Dict[str, float] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(row.holds for row in self.rows)

    def add(self, item: str, lhs: Estimate, rhs: Estimate) -> None:
        stderr = math.sqrt(lhs.stderr ** 2 + rhs.stderr ** 2)
        holds = lhs.value <= rhs.value + SLACK_STDERR * stderr + 1e-12 * (1.0 + abs(rhs.value))
        self.rows.append(DependenceCheckRow(item=item, lhs=lhs.value, rhs=rhs.value, stderr=stderr, holds=bool(holds)))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([row.model_dump() for row in self.rows], columns=["item", "lhs", "rhs", "stderr", "holds"])
        frame.insert(0, "check", self.check)
        return frame


def _sample_sparse_directions(p: int, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    thetas = np.zeros((count, p))
    for t in range(count):
        support = np.sort(rng.choice(p, size=k, replace=False))
        direction = rng.standard_normal(k)
        thetas[t, support] = direction / np.linalg.norm(direction)
    return thetas


def check_sparse_combination(
    spec: CausalSpec,
    k: int,
    n_theta: int = 100,
    r: float = 2.0,
    nu: float = 1.0,
    reps: int = 2000,
    seed: int = 0,
    thetas: Optional[np.ndarray] = None,
) -> DependenceCheckReport:
    """||{thetaᵀX}||_{r,nu} <= sqrt(k) K for k-sparse unit theta.

    K is the larger of the maximal per-coordinate adjusted norm and the
    maximal covariate mean magnitude.
    """
    if not 1 <= k <= spec.p:
        raise InputError(f"need 1 <= k <= {spec.p}, got {k}")
    if reps < MIN_REPS:
        raise InputError(f"need at least {MIN_REPS} replications, got {reps}")
    if thetas is None:
        thetas = _sample_sparse_directions(spec.p, k, n_theta, stream(seed, "sparse-theta", k))
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[1] != spec.p:
        raise InputError(f"directions must have length {spec.p}")
    horizon = spec.resolved_horizon()
    report = DependenceCheckReport(check="sparse_combination")
    for regime, scale in enumerate(_regimes(spec)):
        differences = []
        for s in range(horizon + 1):
            w, wc = _coupled_batch(spec, s, reps, seed, regime, scale)
            differences.append(w[:, : spec.p] - wc[:, : spec.p])
        coord_norms = []
        for j in range(spec.p):
            est = [_moment_norm(d[:, j], r) for d in differences]
            coord_norms.append(_adjusted(np.array([e.value for e in est]), np.array([e.stderr for e in est]), nu))
        k_norm = max(coord_norms, key=lambda e: e.value)
        k_mean = max(abs(stationary_mean(spec, j, scale)) for j in range(spec.p))
        bound = Estimate(math.sqrt(k) * max(k_norm.value, k_mean), math.sqrt(k) * k_norm.stderr)
        report.quantities[f"K_regime{regime}"] = max(k_norm.value, k_mean)
        for t, theta in enumerate(thetas):
            est = [_moment_norm(d @ theta, r) for d in differences]
            lhs = _adjusted(np.array([e.value for e in est]), np.array([e.stderr for e in est]), nu)
            report.add(f"regime{regime}/theta{t}", lhs, bound)
    return report


def _factor_values(factor: Factor, w: np.ndarray) -> np.ndarray:
    if isinstance(factor, Constant):
        return np.full(w.shape[0], float(factor.value))
    return w[:, int(factor)]


def _factor_mean(spec: CausalSpec, factor: Factor, scale: float) -> float:
    if isinstance(factor, Constant):
        return float(factor.value)
    return stationary_mean(spec, int(factor), scale)


def _factor_label(factor: Factor) -> str:
    return f"c={factor.value:g}" if isinstance(factor, Constant) else f"W{int(factor)}"


def check_product_process(
    spec: CausalSpec,
    pairs: Sequence[Tuple[Factor, Factor]],
    r: float = 4.0,
    nu: float = 1.0,
    reps: int = 2000,
    seed: int = 0,
) -> DependenceCheckReport:
    """
    Product-process bound.

    ||{W1 W2}||_{r/2,nu} <= ||W1||_{r,0} ||W2||_{r,nu} + |E W1| ||W2||_{r,nu}
                           + ||W2||_{r,0} ||W1||_{r,nu} + |E W2| ||W1||_{r,nu}

    Args:
        spec: causal process
        pairs: factor pairs; a factor is a coordinate index or a Constant
        r: moment order of the factors (the product uses r/2)
        nu: decay exponent
        reps: replications per lag
        seed: seed

    Returns:
        DependenceCheckReport with one row per pair and regime
    """
    if r < 2:
        raise InputError(f"need r >= 2 so that r/2 >= 1, got {r}")
    horizon = spec.resolved_horizon()
    report = DependenceCheckReport(check="product_process")
    for regime, scale in enumerate(_regimes(spec)):
        batches = [_coupled_batch(spec, s, reps, seed, regime, scale) for s in range(horizon + 1)]

        def process_norms(values_of) -> Tuple[Estimate, Estimate]:
            est = [_moment_norm(values_of(w) - values_of(wc), r) for w, wc in batches]
            values = np.array([e.value for e in est])
            errors = np.array([e.stderr for e in est])
            return _adjusted(values, errors, 0.0), _adjusted(values, errors, nu)

        for f1, f2 in pairs:
            est = [
                _moment_norm(_factor_values(f1, w) * _factor_values(f2, w) - _factor_values(f1, wc) * _factor_values(f2, wc), r / 2.0)
                for w, wc in batches
            ]
            lhs = _adjusted(np.array([e.value for e in est]), np.array([e.stderr for e in est]), nu)
            n1_0, n1_nu = process_norms(lambda w: _factor_values(f1, w))
            n2_0, n2_nu = process_norms(lambda w: _factor_values(f2, w))
            m1 = abs(_factor_mean(spec, f1, scale))
            m2 = abs(_factor_mean(spec, f2, scale))
            value = n1_0.value * n2_nu.value + m1 * n2_nu.value + n2_0.value * n1_nu.value + m2 * n1_nu.value
            stderr = math.sqrt(
                (n1_0.stderr * n2_nu.value) ** 2 + ((n1_0.value + m1) * n2_nu.stderr) ** 2
                + (n2_0.stderr * n1_nu.value) ** 2 + ((n2_0.value + m2) * n1_nu.stderr) ** 2
            )
            report.add(f"regime{regime}/{_factor_label(f1)}*{_factor_label(f2)}", lhs, Estimate(value, stderr))
    return report


def check_moment_domination(
    spec: CausalSpec,
    r_grid: Sequence[float] = (2.0, 3.0, 4.0),
    j: int = 0,
    reps: int = 2000,
    seed: int = 0,
) -> DependenceCheckReport:
    """||W(j) - E W(j)||_r <= ||{W(j)}||_{r,0} = Delta_{0,r,j} for each r on the grid."""
    if not 0 <= j <= spec.p:
        raise InputError(f"coordinate {j} outside 0..{spec.p}")
    horizon = spec.resolved_horizon()
    law = spec.innovation
    report = DependenceCheckReport(check="moment_domination")
    for regime, scale in enumerate(_regimes(spec)):
        windows = draw_law(stream(seed, "moments", regime), law.kind, (reps, horizon + 1, spec.p + 1), law.alpha, law.scale)
        centered = causal_values(spec, windows, scale)[:, j] - stationary_mean(spec, j, scale)
        batches = [_coupled_batch(spec, s, reps, seed, regime, scale) for s in range(horizon + 1)]
        for r in r_grid:
            lhs = _moment_norm(centered, r)
            est = [_moment_norm(w[:, j] - wc[:, j], r) for w, wc in batches]
            rhs = Estimate(sum(e.value for e in est), math.sqrt(sum(e.stderr ** 2 for e in est)))
            report.add(f"regime{regime}/r={r:g}", lhs, rhs)
    return report
