"""
Tail-bound non-violation checks.

Each experiment replicates a statistic, evaluates the dominant (square-root)
term of its bound at several t, and compares the violation frequency with the
probability cap plus three binomial standard errors. Variance proxies on the
right-hand side are certified upper bounds; second-order terms with C = 1 and
net-approximated proxies are reported as diagnostics only.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Literal, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from verifiers.data_gen import CausalSpec, IndepSpec, gen_causal, gen_independent, population_pair, stationary_mean, stream
from verifiers.dependence_lab import Estimate, adjusted_norms, analytic_profile, build_profile
from verifiers.error_norms import dvec, rip
from verifiers.errors import InputError
from verifiers.regression_core import Dataset, empirical_pair
from verifiers.sparse_net import build_net, cardinality_bounds, sample_theta

from .constants import b_nu, omega_n, s_fn, t1
from .rates import draw_dataset

logger = logging.getLogger(__name__)

Experiment = Literal["max-mean", "sparse-iid", "max-sum", "sparse-dependent"]

MIN_TAIL_REPS = 2000
DEFAULT_T_GRID = (1.0, 2.0, 3.0)
CAP_FACTORS = {"max-mean": 3.0, "sparse-iid": 6.0, "max-sum": 8.0, "sparse-dependent": 16.0}
SLACK_STDERR = 3.0
MOMENT_DRAWS = 200_000
PROFILE_REPS = 4000
NET_DIAG_LIMIT = 20_000
NET_DIAG_THETAS = 2000
NET_DIAG_ROWS = 20_000


class TailRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: str
    statistic: str
    n: int
    p: int
    k: int
    t: float
    reps: int
    violations: int
    frequency: float
    cap: float
    slack: float
    holds: bool
    bound: float
    max_statistic: float
    proxy: float
    proxy_lower: Optional[float] = None
    second_order: float
    nu: Optional[float] = None
    jexp: bool = False


class TailReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: str
    rows: List[TailRow]

    @property
    def passed(self) -> bool:
        return all(row.holds for row in self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump() for row in self.rows], columns=list(TailRow.model_fields))


class _Term(NamedTuple):
    """Dominant term c * sqrt(proxy * (t + entropy) / n) and the second-order diagnostic."""

    statistic: str
    constant: float
    proxy: float
    entropy: float
    second: Callable[[float], float]
    proxy_lower: Optional[float] = None

    def bound(self, t: float, n: int) -> float:
        return self.constant * math.sqrt(self.proxy * (t + self.entropy) / n)


def tail_cap(experiment: str, t: float) -> float:
    return min(1.0, CAP_FACTORS[experiment] * math.exp(-t))


def binomial_slack(cap: float, reps: int) -> float:
    return SLACK_STDERR * math.sqrt(cap * (1.0 - cap) / reps)


def psi_norm_bound(kind: str, alpha: float, sd: float) -> float:
    """K with E exp(|X|^alpha / K^alpha) <= 2 for the generator's symmetric laws.

    gaussian: sd sqrt(8/3); rademacher: sd / sqrt(log 2); sign * sd * E^{1/alpha}: 2^{1/alpha} sd.
    """
    if kind == "gaussian":
        return sd * math.sqrt(8.0 / 3.0)
    if kind == "rademacher":
        return sd / math.sqrt(math.log(2.0))
    if kind == "subweibull":
        return 2.0 ** (1.0 / alpha) * sd
    raise InputError(f"unknown law {kind}")


def _law_order(kind: str, alpha: float) -> float:
    return alpha if kind == "subweibull" else 2.0


def design_variances(spec: IndepSpec) -> np.ndarray:
    """Exact E X_j^2 of the random design columns."""
    law = spec.design
    q = spec.random_columns
    if law.kind == "gaussian":
        return law.scale ** 2 * np.diag(spec.design_covariance())
    if law.kind == "subweibull":
        return np.full(q, law.scale ** 2 * math.gamma(1.0 + 2.0 / law.alpha))
    return np.full(q, law.scale ** 2)


def _design_psi(spec: IndepSpec) -> float:
    law = spec.design
    sd = law.scale if law.kind != "gaussian" else law.scale * math.sqrt(float(np.max(np.diag(spec.design_covariance()))))
    return psi_norm_bound(law.kind, law.alpha, sd)


def _random_columns(d: Dataset) -> np.ndarray:
    return d.x[:, 1:] if d.intercept else d.x


def _upper(values: np.ndarray) -> float:
    """max_j of column means plus three standard errors."""
    n = values.shape[0]
    means = values.mean(axis=0)
    errors = values.std(axis=0, ddof=1) / math.sqrt(n)
    return float(np.max(means + SLACK_STDERR * errors))


def certified_upsilon(spec: Union[IndepSpec, CausalSpec], k: int, seed: int, draws: int = MOMENT_DRAWS) -> Dict[str, float]:
    """
    Upper bounds on the variance proxies of D and RIP.

    Upsilon^Gamma <= k max_j E[X_j^2 Y^2] and Upsilon^Sigma <= k^2 max_j E[X_j^4],
    by Cauchy-Schwarz with ||theta||_1 <= sqrt(k); moments are estimated on a
    large sample and raised by three standard errors.
    """
    sample = draw_dataset(spec, draws, seed, "tail-moments")
    x, y = sample.x, sample.y
    return {
        "gamma": k * _upper((x * y[:, None]) ** 2),
        "sigma": k * k * _upper(x ** 4),
    }


def _candidate_thetas(p: int, k: int, seed: int) -> np.ndarray:
    if cardinality_bounds(p, k, 0.25)[0] <= NET_DIAG_LIMIT:
        points = build_net(p, k, 0.25, seed).points
    else:
        points = sample_theta(p, k, NET_DIAG_THETAS, stream(seed, "tail-thetas", p, k))
    return np.vstack([np.eye(p), points])


def net_upsilon(spec: Union[IndepSpec, CausalSpec], k: int, seed: int, draws: int = NET_DIAG_ROWS) -> Dict[str, float]:
    """Lower approximations of the variance proxies: sample variances maximized over a net (or random directions)."""
    sample = draw_dataset(spec, draws, seed, "tail-net")
    thetas = _candidate_thetas(sample.p, k, seed)
    proj = sample.x @ thetas.T
    return {
        "gamma": float(np.max(np.var(proj * sample.y[:, None], axis=0, ddof=1))),
        "sigma": float(np.max(np.var(proj ** 2, axis=0, ddof=1))),
    }


def _terms_max_mean(spec: IndepSpec, n: int) -> List[_Term]:
    if not isinstance(spec, IndepSpec):
        raise InputError("max-of-means check needs an independent generator")
    q = spec.random_columns
    gamma = float(np.max(design_variances(spec)))
    alpha = _law_order(spec.design.kind, spec.design.alpha)
    big_k = _design_psi(spec)
    entropy = math.log(2.0 * q)

    def second(t: float) -> float:
        return big_k * math.log(2.0 * n) ** (1.0 / alpha) * (t + entropy) ** (1.0 / t1(alpha)) / n

    return [_Term("max_mean", 7.0, gamma, entropy, second)]


def _terms_sparse_iid(spec: IndepSpec, n: int, k: int, seed: int, jexp: bool, diagnostics: bool) -> List[_Term]:
    if not isinstance(spec, IndepSpec):
        raise InputError("independent D/RIP check needs an independent generator")
    p = spec.p
    upsilon = certified_upsilon(spec, k, seed)
    lower = net_upsilon(spec, k, seed) if diagnostics else {}
    alpha = _law_order(spec.design.kind, spec.design.alpha)
    big_k = _design_psi(spec)
    half = t1(alpha / 2.0)

    def make(entropy: float, k_factor: float):
        def second(t: float) -> float:
            return big_k ** 2 * k_factor * math.log(2.0 * n) ** (2.0 / alpha) * (t + entropy) ** (1.0 / half) / n
        return second

    d_entropy = k * math.log(3.0 * math.e * p / k)
    r_entropy = k * math.log(5.0 * math.e * p / k)
    return [
        _Term("D", 14.0, upsilon["gamma"], d_entropy, make(d_entropy, 1.0 if jexp else math.sqrt(k)), lower.get("gamma")),
        _Term("RIP", 14.0, upsilon["sigma"], r_entropy, make(r_entropy, 1.0 if jexp else float(k)), lower.get("sigma")),
    ]


def _regime_scales(spec: CausalSpec) -> List[float]:
    return [1.0] if spec.switch_at is None else [1.0, spec.switch_scale]


def _covariate_norms(spec: CausalSpec, nu: float, seed: int, reps: int) -> Dict[str, Estimate]:
    """||X(j)||_{r, nu'} maxima over covariates: analytic for gaussian innovations, raised Monte Carlo otherwise."""
    coords = list(range(spec.p))
    if spec.innovation.kind == "gaussian":
        profile = analytic_profile(spec, (2.0, 4.0), coords)
    else:
        profile = build_profile(spec, (2.0, 4.0), coords, reps, seed)
    adjusted_norms(profile, sorted({0.0, float(nu)}), (2.0,))

    def raised(r: float, v: float) -> Estimate:
        est = profile.max_adjusted(r, v)
        return Estimate(est.value + SLACK_STDERR * est.stderr, est.stderr)

    psi = max(profile.psi[(2.0, float(nu), j)].value for j in coords)
    return {"l2": raised(2.0, nu), "l4_0": raised(4.0, 0.0), "l4": raised(4.0, nu), "psi": Estimate(psi, 0.0)}


def _response_norms(spec: CausalSpec, nu: float, seed: int, reps: int) -> Dict[str, float]:
    profile = build_profile(spec, (2.0, 4.0), [spec.p], reps, seed)
    adjusted_norms(profile, sorted({0.0, float(nu)}))

    def raised(v: float) -> float:
        est = profile.max_adjusted(4.0, v)
        return est.value + SLACK_STDERR * est.stderr

    mean = max(abs(stationary_mean(spec, spec.p, scale)) for scale in _regime_scales(spec))
    return {"l4_0": raised(0.0), "l4": raised(nu), "mean": mean}


def _terms_max_sum(spec: CausalSpec, n: int, nu: float, seed: int, profile_reps: int) -> List[_Term]:
    if not isinstance(spec, CausalSpec):
        raise InputError("dependent max-of-sums check needs a causal generator")
    q = spec.p
    norms = _covariate_norms(spec, nu, seed, profile_reps)
    entropy = math.log(q + 1.0)
    s_alpha = s_fn(2.0)
    # e sqrt(n) ||Z|| B sqrt(t + h) written as e B sqrt(proxy (t + h) / n)
    proxy = (n * norms["l2"].value) ** 2
    big_k = norms["psi"].value

    def second(t: float) -> float:
        return big_k * math.log(n) ** (1.0 / s_alpha) * omega_n(n, nu) * (t + entropy) ** (1.0 / t1(s_alpha))

    return [_Term("max_sum", math.e * b_nu(nu), proxy, entropy, second)]


def _terms_sparse_dependent(spec: CausalSpec, n: int, k: int, nu: float, seed: int, profile_reps: int) -> List[_Term]:
    if not isinstance(spec, CausalSpec):
        raise InputError("dependent D/RIP check needs a causal generator")
    p = spec.p
    xn = _covariate_norms(spec, nu, seed, profile_reps)
    yn = _response_norms(spec, nu, seed, profile_reps)
    root_k = math.sqrt(k)
    theta_gamma = root_k * xn["l4_0"].value * yn["l4"] + (yn["l4_0"] + yn["mean"]) * root_k * xn["l4"].value
    theta_sigma = 2.0 * k * xn["l4_0"].value * xn["l4"].value
    big_k = xn["psi"].value
    s_half = s_fn(1.0)
    constant = 2.0 * math.e * b_nu(nu)

    def make(entropy: float, k_factor: float):
        def second(t: float) -> float:
            return (big_k ** 2 * k_factor * math.log(n) ** (1.0 / s_half) * omega_n(n, nu)
                    * (t + entropy) ** (1.0 / t1(s_half)) / n)
        return second

    d_entropy = k * math.log(3.0 * math.e * p / k)
    r_entropy = k * math.log(5.0 * math.e * p / k)
    # the RIP bound uses the Sigma proxy
    return [
        _Term("D", constant, theta_gamma ** 2, d_entropy, make(d_entropy, root_k)),
        _Term("RIP", constant, theta_sigma ** 2, r_entropy, make(r_entropy, float(k))),
    ]


def _statistics(experiment: str, spec, n: int, k: int, seed: int, rep: int, population) -> Dict[str, float]:
    if experiment == "max-mean":
        d = gen_independent(spec, n, seed, "tails", rep)
        return {"max_mean": float(np.max(np.abs(_random_columns(d).mean(axis=0))))}
    if experiment == "max-sum":
        d = gen_causal(spec, n, seed, "tails", rep)[0]
        return {"max_sum": float(np.max(np.abs(d.x.sum(axis=0))))}
    d = draw_dataset(spec, n, seed, "tails", rep)
    pair_hat = empirical_pair(d)
    return {
        "D": dvec(k, pair_hat.gamma - population.gamma).value,
        "RIP": rip(k, pair_hat.sigma - population.sigma).value,
    }


def tail_check(
    experiment: Experiment,
    spec: Union[IndepSpec, CausalSpec],
    n: int,
    k: int = 1,
    reps: int = MIN_TAIL_REPS,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    seed: int = 0,
    nu: float = 1.0,
    jexp: bool = False,
    diagnostics: bool = True,
    threads: int = 1,
    profile_reps: int = PROFILE_REPS,
) -> TailReport:
    """
    Violation frequencies of one tail bound.

    Args:
        experiment: "max-mean" (max of means, independent), "sparse-iid" (D and RIP,
            independent), "max-sum" (max of sums, causal), "sparse-dependent" (D and RIP, causal)
        spec: generator matching the experiment
        n: sample size
        k: sparsity for the D/RIP experiments
        reps: replications, at least 2000
        t_grid: deviation levels
        seed: seed; rep r uses the streams labelled ("tails", r)
        nu: decay exponent of the dependence-adjusted norms
        jexp: drop the k factors of the second-order diagnostic (joint tails)
        diagnostics: also evaluate net-approximated proxies (independent D/RIP only)
        threads: worker count for replications
        profile_reps: Monte Carlo size for non-analytic dependence norms

    Returns:
        TailReport with one row per (statistic, t), plus an "any" row for the
        simultaneous D/RIP statement
    """
    if experiment not in CAP_FACTORS:
        raise InputError(f"unknown tail experiment {experiment}")
    if reps < MIN_TAIL_REPS:
        raise InputError(f"need at least {MIN_TAIL_REPS} replications, got {reps}")
    if not t_grid or min(t_grid) < 0:
        raise InputError("t grid must be nonempty and nonnegative")
    if nu <= 0:
        raise InputError(f"nu must be positive, got {nu}")
    joint = experiment in ("sparse-iid", "sparse-dependent")
    if joint and not 1 <= k <= spec.p:
        raise InputError(f"need 1 <= k <= {spec.p}, got k={k}")

    if experiment == "max-mean":
        terms = _terms_max_mean(spec, n)
    elif experiment == "sparse-iid":
        terms = _terms_sparse_iid(spec, n, k, seed, jexp, diagnostics)
    elif experiment == "max-sum":
        terms = _terms_max_sum(spec, n, nu, seed, profile_reps)
    else:
        terms = _terms_sparse_dependent(spec, n, k, nu, seed, profile_reps)
    population = population_pair(spec, n=n, seed=seed).pair if joint else None

    logger.info(f"tail check {experiment}: n={n}, {reps} replications")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        stats = list(pool.map(lambda rep: _statistics(experiment, spec, n, k, seed, rep, population), range(reps)))
    values = {term.statistic: np.array([s[term.statistic] for s in stats]) for term in terms}

    rows: List[TailRow] = []
    dependent = experiment in ("max-sum", "sparse-dependent")
    for t in t_grid:
        cap = tail_cap(experiment, t)
        slack = binomial_slack(cap, reps)
        exceeded = np.zeros(reps, dtype=bool)
        for term in terms:
            bound = term.bound(t, n)
            hits = values[term.statistic] > bound
            exceeded |= hits
            freq = float(hits.mean())
            rows.append(TailRow(
                experiment=experiment, statistic=term.statistic, n=n, p=spec.p, k=k, t=t, reps=reps,
                violations=int(hits.sum()), frequency=freq, cap=cap, slack=slack, holds=freq <= cap + slack,
                bound=bound, max_statistic=float(values[term.statistic].max()), proxy=term.proxy,
                proxy_lower=term.proxy_lower, second_order=term.second(t),
                nu=nu if dependent else None, jexp=jexp,
            ))
            if term.proxy_lower is not None and term.proxy_lower > term.proxy:
                logger.warning(f"{experiment} {term.statistic}: net proxy {term.proxy_lower:.4g} exceeds certified {term.proxy:.4g}")
        if joint:
            freq = float(exceeded.mean())
            rows.append(TailRow(
                experiment=experiment, statistic="any", n=n, p=spec.p, k=k, t=t, reps=reps,
                violations=int(exceeded.sum()), frequency=freq, cap=cap, slack=slack, holds=freq <= cap + slack,
                bound=math.nan, max_statistic=math.nan, proxy=math.nan, second_order=math.nan,
                nu=nu if dependent else None, jexp=jexp,
            ))
    report = TailReport(experiment=experiment, rows=rows)
    for row in rows:
        if not row.holds:
            logger.error(f"{experiment} {row.statistic} t={row.t}: frequency {row.frequency:.4f} above {row.cap:.4f} + {row.slack:.4f}")
    return report
