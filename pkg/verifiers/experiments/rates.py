"""
Monte Carlo rate sweeps: uniform-in-model estimation and representation
errors against n, and log-log slope fits.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from verifiers.data_gen import CausalSpec, IndepSpec, PopulationPair, gen_causal, gen_independent, population_pair
from verifiers.error_norms import dvec, lambda_sparse, rip, strength
from verifiers.errors import ConfigError, InputError
from verifiers.regression_core import Dataset, empirical_pair, fit_all, lin_rep_term

logger = logging.getLogger(__name__)

ERROR_COLUMNS = ("sup_l2_err", "sup_l1_err", "sup_rep_err", "rip", "d")


class RateRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int
    p: int
    k: int
    rep: int
    sup_l2_err: float
    sup_l1_err: float
    sup_rep_err: float
    rip: float
    d: float
    lambda_k: float
    s2k: float
    seed: int


class SlopeFit(NamedTuple):
    slope: float
    stderr: float
    intercept: float


def fit_loglog_slope(ns: Sequence[float], values: Sequence[float]) -> SlopeFit:
    """OLS fit of log(values) on log(ns) with the usual slope stderr."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 2 or x.size != y.size:
        raise InputError("need at least two matching points for a slope")
    if not np.all(np.isfinite(y)):
        raise InputError("slope fit needs positive values")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    if x.size > 2:
        resid = y - intercept - slope * x
        stderr = math.sqrt(float(resid @ resid) / (x.size - 2) / sxx)
    else:
        stderr = 0.0
    return SlopeFit(slope, stderr, intercept)


def draw_dataset(spec: Union[IndepSpec, CausalSpec], n: int, seed: int, *labels) -> Dataset:
    if isinstance(spec, IndepSpec):
        return gen_independent(spec, n, seed, *labels)
    if isinstance(spec, CausalSpec):
        return gen_causal(spec, n, seed, *labels)[0]
    raise InputError(f"unsupported generator {type(spec).__name__}")


class _PopulationCell(NamedTuple):
    population: PopulationPair
    betas: Dict[tuple, np.ndarray]
    lambda_k: float
    s2k: float


def _population_cell(spec, n: int, k: int, seed: int, draws: int, threads: int) -> _PopulationCell:
    pop = population_pair(spec, n=n, seed=seed, draws=draws)
    fits = fit_all(pop.pair, k, threads)
    singular = [m for m, f in fits.items() if not f.ok]
    if singular:
        raise ConfigError(f"population gram singular for {len(singular)} models (first {singular[0]}); need Lambda_n(k) > 0")
    lam = lambda_sparse(k, pop.pair.sigma, threads).value
    if lam <= 0:
        raise ConfigError(f"sparse minimum eigenvalue {lam:.3e} is not positive")
    s2k = strength(2, k, pop.pair, threads).value
    return _PopulationCell(pop, {m: f.beta for m, f in fits.items()}, lam, s2k)


def rate_cell(spec, n: int, k: int, rep: int, seed: int, cell: _PopulationCell) -> RateRow:
    """One replication: sup over M(k) of the L2, L1 and representation errors."""
    d = draw_dataset(spec, n, seed, "rates", rep)
    pair_hat = empirical_pair(d)
    pop = cell.population.pair
    l2 = l1 = rep_err = 0.0
    skipped = 0
    for m, fit in fit_all(pair_hat, k).items():
        if not fit.ok:
            skipped += 1
            continue
        err = fit.beta - cell.betas[m]
        l2 = max(l2, float(np.linalg.norm(err)))
        l1 = max(l1, float(np.sum(np.abs(err))))
        residual = err - lin_rep_term(d, pop.sigma, cell.betas[m], m)
        rep_err = max(rep_err, float(np.linalg.norm(residual)))
    if skipped:
        logger.warning(f"n={n} rep={rep}: {skipped} empirically singular models skipped")
    return RateRow(
        n=n,
        p=d.p,
        k=k,
        rep=rep,
        sup_l2_err=l2,
        sup_l1_err=l1,
        sup_rep_err=rep_err,
        rip=rip(k, pair_hat.sigma - pop.sigma).value,
        d=dvec(k, pair_hat.gamma - pop.gamma).value,
        lambda_k=cell.lambda_k,
        s2k=cell.s2k,
        seed=seed,
    )


class RateSweep(NamedTuple):
    rows: pd.DataFrame
    slopes: Dict[str, SlopeFit]


def rate_sweep(
    spec: Union[IndepSpec, CausalSpec],
    n_grid: Sequence[int],
    k: int,
    reps: int,
    seed: int,
    threads: int = 1,
    draws: int = 1_000_000,
) -> RateSweep:
    """
    Replicated uniform-error sweep over a grid of sample sizes.

    Args:
        spec: generator
        n_grid: sample sizes, usually geometric
        k: maximal model size
        reps: replications per n
        seed: seed; every row is reproducible from (spec, n, rep, seed)
        threads: worker count for replications
        draws: Monte Carlo size for population pairs without closed form

    Returns:
        RateSweep with rows sorted by (n, rep) and slopes of the mean errors

    Raises:
        ConfigError: a population model is singular
    """
    if reps < 1 or not n_grid:
        raise InputError("need reps >= 1 and a nonempty n grid")
    rows: List[RateRow] = []
    for n in n_grid:
        cell = _population_cell(spec, n, k, seed, draws, threads)
        logger.info(f"rates: n={n}, {reps} replications")
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            rows.extend(pool.map(lambda rep: rate_cell(spec, n, k, rep, seed, cell), range(reps)))
    frame = pd.DataFrame([row.model_dump() for row in rows]).sort_values(["n", "rep"], kind="stable").reset_index(drop=True)
    return RateSweep(frame, slopes_of(frame))


def slopes_of(frame: pd.DataFrame, columns: Sequence[str] = ERROR_COLUMNS) -> Dict[str, SlopeFit]:
    means = frame.groupby("n")[list(columns)].mean()
    if len(means) < 2:
        return {}
    out = {}
    for column in columns:
        values = means[column]
        if (values > 0).all():
            out[column] = fit_loglog_slope(means.index.to_numpy(dtype=float), values.to_numpy())
    return out


def slope_frame(slopes: Dict[str, SlopeFit], windows: Optional[Dict[str, Sequence[float]]] = None) -> pd.DataFrame:
    windows = windows or {}
    rows = []
    for name, fit in slopes.items():
        lo, hi = windows.get(name, (None, None))
        within = None if lo is None else bool(lo <= fit.slope <= hi)
        rows.append({"quantity": name, "slope": fit.slope, "stderr": fit.stderr, "intercept": fit.intercept,
                     "window_lo": lo, "window_hi": hi, "within": within})
    return pd.DataFrame(rows, columns=["quantity", "slope", "stderr", "intercept", "window_lo", "window_hi", "within"])
