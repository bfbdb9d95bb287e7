"""
Exact numerics behind the dependent tail bound: s, T1, Omega_n, B_nu, the
lambda_l weights and the two summation-versus-cap inequalities.
"""
import logging
import math
from typing import Dict, List, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from verifiers.errors import InputError, NumericalError

logger = logging.getLogger(__name__)

DEFAULT_N_GRID = tuple(2 ** e for e in range(6, 15))
DEFAULT_BETA_GRID = (0.25, 0.5, 1.0, 2.0)
DEFAULT_POWER_GRID = (2.0, 3.0, 4.0)
DEFAULT_NU_GRID = (0.25, 0.5, 1.0, 2.0)
DEFAULT_LAMBDA_GRID = (0.5, 2.0 / 3.0, 1.0, 2.0, 4.0)
ROUNDING = 1e-12


def s_fn(lam: float) -> float:
    """s(lambda) = (1/2 + 1/lambda)^{-1}."""
    if lam <= 0:
        raise InputError(f"lambda must be positive, got {lam}")
    return 1.0 / (0.5 + 1.0 / lam)


def t1(lam: float) -> float:
    """T1(lambda) = min(lambda, 1)."""
    if lam <= 0:
        raise InputError(f"lambda must be positive, got {lam}")
    return min(lam, 1.0)


def log2_floor(n: int) -> int:
    """L = floor(log n / log 2), exact for integers."""
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    return int(n).bit_length() - 1


def omega_n(n: int, nu: float) -> float:
    """Dependence factor of the second-order term."""
    if nu <= 0:
        raise InputError(f"nu must be positive, got {nu}")
    if nu > 0.5:
        return 2.0 ** nu * 5.0 / (nu - 0.5) ** 3
    if nu == 0.5:
        return 2.0 ** nu * 2.0 * math.log2(n) ** 2.5
    return 2.0 ** nu * 5.0 * (2.0 * n) ** (0.5 - nu) / (0.5 - nu) ** 3


def b_nu(nu: float) -> float:
    """B_nu = sqrt(6) (1 + 20 pi^3 2^nu / (3 sqrt(3) nu^3))."""
    if nu <= 0:
        raise InputError(f"nu must be positive, got {nu}")
    return math.sqrt(6.0) * (1.0 + 20.0 * math.pi ** 3 * 2.0 ** nu / (3.0 * math.sqrt(3.0) * nu ** 3))


def lambda_ell(n: int) -> List[float]:
    """Weights lambda_1..lambda_L, symmetric around L/2."""
    big_l = log2_floor(n)
    c = 3.0 / math.pi ** 2
    return [c * ell ** -2.0 if ell <= big_l / 2.0 else c * (big_l + 1 - ell) ** -2.0 for ell in range(1, big_l + 1)]


class SummationCheck(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int
    beta: float
    power: float
    first_sum: float
    first_cap: float
    second_sum: float
    second_cap: float

    @property
    def holds(self) -> bool:
        return (self.first_sum <= self.first_cap * (1.0 + ROUNDING)
                and self.second_sum <= self.second_cap * (1.0 + ROUNDING))


def summation_check(n: int, beta: float, power: float) -> SummationCheck:
    """
    Direct sums and caps.

    first:  sum_l 1 / (lambda_l^p 2^{p l beta})
    second: sum_l 2^{p l (1/2 - beta)} / lambda_l^p

    Args:
        n: sample size (L = floor(log2 n))
        beta: decay parameter, >= 0 (the second sum needs > 0)
        power: moment exponent p >= 2

    Returns:
        SummationCheck
    """
    if power < 2:
        raise InputError(f"exponent must be >= 2, got {power}")
    if beta < 0:
        raise InputError(f"beta must be nonnegative, got {beta}")
    lams = lambda_ell(n)
    p = power
    lead = (math.pi ** 2 / 3.0) ** (p + 1)
    log2n = math.log2(n)
    first = sum(1.0 / (lam ** p * 2.0 ** (p * ell * beta)) for ell, lam in enumerate(lams, start=1))
    first_cap = lead * ((5.0 / beta ** 3) ** p if beta > 0 else 2.0 * log2n ** (2 * p + 1))
    second = sum(2.0 ** (p * ell * (0.5 - beta)) / lam ** p for ell, lam in enumerate(lams, start=1))
    if beta > 0.5:
        second_cap = lead * (5.0 / (beta - 0.5) ** 3) ** p
    elif beta == 0.5:
        second_cap = lead * 2.0 * log2n ** (2 * p + 1)
    elif beta > 0:
        second_cap = lead * (2.0 * n) ** ((0.5 - beta) * p) * (5.0 / (0.5 - beta) ** 3) ** p
    else:
        second_cap = math.inf
    return SummationCheck(n=n, beta=beta, power=power, first_sum=first, first_cap=first_cap, second_sum=second, second_cap=second_cap)


class AppendixConstants(BaseModel):
    model_config = ConfigDict(extra="forbid")

    s: Dict[float, float] = Field(default_factory=dict)
    t1: Dict[float, float] = Field(default_factory=dict)
    omega: Dict[Tuple[int, float], float] = Field(default_factory=dict)
    b_nu: Dict[float, float] = Field(default_factory=dict)
    lambda_sums: Dict[int, float] = Field(default_factory=dict)
    summations: List[SummationCheck] = Field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        rows = [{"quantity": "s", "n": None, "parameter": lam, "value": v} for lam, v in self.s.items()]
        rows += [{"quantity": "T1", "n": None, "parameter": lam, "value": v} for lam, v in self.t1.items()]
        rows += [{"quantity": "Omega_n", "n": n, "parameter": nu, "value": v} for (n, nu), v in self.omega.items()]
        rows += [{"quantity": "B_nu", "n": None, "parameter": nu, "value": v} for nu, v in self.b_nu.items()]
        rows += [{"quantity": "sum_lambda", "n": n, "parameter": None, "value": v} for n, v in self.lambda_sums.items()]
        return pd.DataFrame(rows, columns=["quantity", "n", "parameter", "value"])

    def summation_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([row.model_dump() for row in self.summations])
        frame["holds"] = [row.holds for row in self.summations]
        return frame


def appendix_numerics(
    n_grid: Sequence[int] = DEFAULT_N_GRID,
    beta_grid: Sequence[float] = DEFAULT_BETA_GRID,
    power_grid: Sequence[float] = DEFAULT_POWER_GRID,
    nu_grid: Sequence[float] = DEFAULT_NU_GRID,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
) -> AppendixConstants:
    """
    Evaluate every constant and check every exact inequality on the grids.

    Raises:
        NumericalError: any inequality fails; this means an implementation error
    """
    out = AppendixConstants()
    for lam in lambda_grid:
        out.s[lam] = s_fn(lam)
        out.t1[lam] = t1(lam)
        if out.s[lam] > min(lam, 2.0) * (1.0 + ROUNDING):
            raise NumericalError(f"s({lam}) = {out.s[lam]} exceeds min(lambda, 2)")
        if not 0.0 < out.t1[lam] <= 1.0:
            raise NumericalError(f"T1({lam}) = {out.t1[lam]} outside (0, 1]")
    for nu in nu_grid:
        out.b_nu[nu] = b_nu(nu)
    for n in n_grid:
        for nu in nu_grid:
            out.omega[(n, nu)] = omega_n(n, nu)
        lams = lambda_ell(n)
        total = math.fsum(lams)
        out.lambda_sums[n] = total
        if not (all(lam > 0 for lam in lams) and total < 1.0):
            raise NumericalError(f"lambda weights for n={n} are not positive with sum < 1 (sum={total})")
        for beta in beta_grid:
            for power in power_grid:
                sums = summation_check(n, beta, power)
                out.summations.append(sums)
                if not sums.holds:
                    raise NumericalError(
                        f"summation cap violated at n={n}, beta={beta}, p={power}: "
                        f"{sums.first_sum:.6g} vs {sums.first_cap:.6g}, {sums.second_sum:.6g} vs {sums.second_cap:.6g}"
                    )
    logger.info(f"constant numerics: {len(out.summations)} summation checks passed")
    return out
