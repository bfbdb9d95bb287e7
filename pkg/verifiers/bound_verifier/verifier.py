"""
Machine-precision checks of the deterministic uniform-in-model inequalities.
"""
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from verifiers.errors import InputError, SingularModelError
from verifiers.error_norms import dvec, lambda_sparse, rip, sparse_max_eigen, strength
from verifiers.linalg_core import ModelIndex, SymmetricMatrix, solve_spd, submatrix
from verifiers.model_space import ModelClassSpec, count_models
from verifiers.regression_core import ModelFit, RegressionPair, fit_all

logger = logging.getLogger(__name__)

SLACK = 1e-9

APPLICABLE = "applicable"
VACUOUS = "vacuous"
NOT_APPLICABLE = "not_applicable"


def tolerance(value: float) -> float:
    return SLACK * (1.0 + abs(value))


def model_label(model: ModelIndex) -> str:
    return "{" + ",".join(str(i) for i in model) + "}"


class BoundRecord(BaseModel):
    """One model's inequality; ``holds`` is None when the check did not run."""

    model_config = ConfigDict(extra="forbid")

    theorem: str
    model: Tuple[int, ...]
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    holds: Optional[bool] = None
    slack: Optional[float] = None
    status: str = "ok"
    extra: Dict[str, float] = Field(default_factory=dict)


class BoundReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    theorem: str
    k: int
    precondition: str
    quantities: Dict[str, float] = Field(default_factory=dict)
    records: List[BoundRecord] = Field(default_factory=list)

    @property
    def applicable(self) -> bool:
        return self.precondition == APPLICABLE

    @property
    def worst_slack(self) -> Optional[float]:
        slacks = [r.slack for r in self.records if r.slack is not None]
        return min(slacks) if slacks else None

    @property
    def failures(self) -> List[BoundRecord]:
        return [r for r in self.records if r.holds is False]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "theorem": r.theorem,
                "model": model_label(r.model),
                "lhs": r.lhs,
                "rhs": r.rhs,
                "holds": r.holds,
                "slack": r.slack,
                "status": r.status,
            }
            for r in self.records
        ]
        return pd.DataFrame(rows, columns=["theorem", "model", "lhs", "rhs", "holds", "slack", "status"])


def upper_record(theorem: str, model: ModelIndex, lhs: float, rhs: float, **extra: float) -> BoundRecord:
    return BoundRecord(
        theorem=theorem, model=model, lhs=lhs, rhs=rhs,
        holds=bool(lhs <= rhs + tolerance(rhs)), slack=rhs - lhs, extra=extra,
    )


def lower_record(theorem: str, model: ModelIndex, lhs: float, rhs: float, **extra: float) -> BoundRecord:
    return BoundRecord(
        theorem=theorem, model=model, lhs=lhs, rhs=rhs,
        holds=bool(lhs >= rhs - tolerance(rhs)), slack=lhs - rhs, extra=extra,
    )


def skipped_record(theorem: str, model: ModelIndex, status: str) -> BoundRecord:
    return BoundRecord(theorem=theorem, model=model, status=status)


class BoundVerifier:
    """Shared state for the checks on one (pair1, pair2, k) triple.

    RIP(k, Sigma1 - Sigma2), D(k, Gamma1 - Gamma2) and Lambda(k; Sigma2) are
    computed once, as are the per-model fits of both pairs.
    """

    def __init__(self, k: int, pair1: RegressionPair, pair2: RegressionPair, threads: int = 1):
        if pair1.p != pair2.p:
            raise InputError(f"pairs have different dimensions {pair1.p} and {pair2.p}")
        if not 1 <= k <= pair1.p:
            raise InputError(f"need 1 <= k <= {pair1.p}, got {k}")
        self.k = k
        self.pair1 = pair1
        self.pair2 = pair2
        self.threads = threads
        self.delta = pair1.sigma - pair2.sigma
        self.rip = rip(k, self.delta, threads).value
        self.d = dvec(k, pair1.gamma - pair2.gamma).value
        self.lam = lambda_sparse(k, pair2.sigma, threads).value
        self.model_count = count_models(ModelClassSpec(p=pair1.p, k=k))
        self._fits1: Optional[Dict[ModelIndex, ModelFit]] = None
        self._fits2: Optional[Dict[ModelIndex, ModelFit]] = None

    @property
    def fits1(self) -> Dict[ModelIndex, ModelFit]:
        if self._fits1 is None:
            self._fits1 = fit_all(self.pair1, self.k, self.threads)
        return self._fits1

    @property
    def fits2(self) -> Dict[ModelIndex, ModelFit]:
        if self._fits2 is None:
            self._fits2 = fit_all(self.pair2, self.k, self.threads)
        return self._fits2

    def quantities(self) -> Dict[str, float]:
        return {
            "rip": self.rip,
            "d": self.d,
            "lambda": self.lam,
            "model_count": float(self.model_count.count),
            "model_count_bound": self.model_count.bound,
        }

    def precondition(self, factor: float = 1.0) -> str:
        """Status of RIP <= factor * Lambda; equality is vacuous."""
        limit = factor * self.lam
        if self.rip < limit:
            return APPLICABLE
        if self.rip == limit:
            return VACUOUS
        return NOT_APPLICABLE

    def _report(self, theorem: str, status: str) -> BoundReport:
        return BoundReport(theorem=theorem, k=self.k, precondition=status, quantities=self.quantities())

    def _silent(self, theorem: str, status: str) -> BoundReport:
        logger.warning(f"{theorem}: precondition {status} (RIP={self.rip:.4g}, Lambda={self.lam:.4g})")
        report = self._report(theorem, status)
        report.records = [skipped_record(theorem, m, status) for m in self.fits2]
        return report

    def _betas(self, model: ModelIndex) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        f1, f2 = self.fits1[model], self.fits2[model]
        if not (f1.ok and f2.ok):
            return None
        return f1.beta, f2.beta

    def influence(self, model: ModelIndex, beta2: np.ndarray) -> np.ndarray:
        """u_M = Sigma2(M)^{-1}(Gamma1(M) - Sigma1(M) beta_M(Sigma2, Gamma2))."""
        idx = list(model)
        rhs = self.pair1.gamma[idx] - submatrix(self.pair1.sigma, model).values @ beta2
        return solve_spd(submatrix(self.pair2.sigma, model), rhs, model=model)

    def check_l2(self) -> BoundReport:
        """Uniform L2 bound (D + RIP ||beta_M(2)||_2) / (Lambda - RIP)."""
        theorem = "l2"
        status = self.precondition()
        if status != APPLICABLE:
            return self._silent(theorem, status)
        report = self._report(theorem, status)
        gap = self.lam - self.rip
        for m in self.fits2:
            betas = self._betas(m)
            if betas is None:
                report.records.append(skipped_record(theorem, m, "singular"))
                continue
            b1, b2 = betas
            lhs = float(np.linalg.norm(b1 - b2))
            rhs = (self.d + self.rip * float(np.linalg.norm(b2))) / gap
            report.records.append(upper_record(theorem, m, lhs, rhs))
        return report

    def check_l1(self) -> BoundReport:
        """Uniform L1 bound: |M|^{1/2} times the L2 right-hand side."""
        theorem = "l1"
        status = self.precondition()
        if status != APPLICABLE:
            return self._silent(theorem, status)
        report = self._report(theorem, status)
        gap = self.lam - self.rip
        for m in self.fits2:
            betas = self._betas(m)
            if betas is None:
                report.records.append(skipped_record(theorem, m, "singular"))
                continue
            b1, b2 = betas
            diff = b1 - b2
            lhs = float(np.sum(np.abs(diff)))
            l2 = float(np.linalg.norm(diff))
            rhs = math.sqrt(len(m)) * (self.d + self.rip * float(np.linalg.norm(b2))) / gap
            report.records.append(upper_record(theorem, m, lhs, rhs, lhs_l2=l2))
        return report

    def check_linrep(self) -> BoundReport:
        """Linear representation bound (RIP / Lambda) ||beta_diff|| plus the exact identity.

        ``extra`` carries the uniform right-hand side and the entrywise
        residual of the representation identity.
        """
        theorem = "linrep"
        status = self.precondition()
        if status != APPLICABLE:
            return self._silent(theorem, status)
        report = self._report(theorem, status)
        s2k = strength(2, self.k, self.pair2, self.threads).value
        rhs_uniform = (self.rip / self.lam) * (self.d + self.rip * s2k) / (self.lam - self.rip)
        report.quantities["s2k"] = s2k
        report.quantities["rhs_uniform"] = rhs_uniform
        for m in self.fits2:
            betas = self._betas(m)
            if betas is None:
                report.records.append(skipped_record(theorem, m, "singular"))
                continue
            b1, b2 = betas
            diff = b1 - b2
            error = diff - self.influence(m, b2)
            identity = solve_spd(submatrix(self.pair2.sigma, m), (submatrix(self.pair2.sigma, m) - submatrix(self.pair1.sigma, m)).values @ diff, model=m)
            residual = float(np.max(np.abs(error - identity)))
            lhs = float(np.linalg.norm(error))
            rhs = (self.rip / self.lam) * float(np.linalg.norm(diff))
            record = upper_record(theorem, m, lhs, rhs, rhs_uniform=rhs_uniform, identity_residual=residual)
            scale = 1.0 + float(np.max(np.abs(identity)))
            if residual > SLACK * scale or rhs > rhs_uniform + tolerance(rhs_uniform):
                record.holds = False
            report.records.append(record)
        return report

    def check_sandwich(self) -> BoundReport:
        """Under RIP <= Lambda / 2: ||u_M|| / 2 <= ||beta_diff|| <= 2 ||u_M||."""
        theorem = "sandwich"
        status = self.precondition(0.5)
        if status != APPLICABLE:
            return self._silent(theorem, status)
        report = self._report(theorem, status)
        for m in self.fits2:
            betas = self._betas(m)
            if betas is None:
                report.records.append(skipped_record(theorem + ".lower", m, "singular"))
                continue
            b1, b2 = betas
            size = float(np.linalg.norm(b1 - b2))
            u = float(np.linalg.norm(self.influence(m, b2)))
            report.records.append(lower_record(theorem + ".lower", m, size, 0.5 * u))
            report.records.append(upper_record(theorem + ".upper", m, size, 2.0 * u))
        return report

    def check_lower(self) -> BoundReport:
        """Representation error >= Lambda(k, Sigma1 - Sigma2) ||beta_diff|| / RIP(k, Sigma2)."""
        theorem = "lower"
        lam_delta = lambda_sparse(self.k, self.delta, self.threads).value
        top = sparse_max_eigen(self.k, self.pair2.sigma, self.threads).value
        if lam_delta <= 0.0 or top <= 0.0:
            report = self._silent(theorem, VACUOUS)
            report.quantities.update({"lambda_delta": lam_delta, "rip_sigma2": top})
            return report
        report = self._report(theorem, APPLICABLE)
        report.quantities.update({"lambda_delta": lam_delta, "rip_sigma2": top})
        factor = lam_delta / top
        for m in self.fits2:
            betas = self._betas(m)
            if betas is None:
                report.records.append(skipped_record(theorem, m, "singular"))
                continue
            b1, b2 = betas
            diff = b1 - b2
            lhs = float(np.linalg.norm(diff - self.influence(m, b2)))
            report.records.append(lower_record(theorem, m, lhs, factor * float(np.linalg.norm(diff))))
        return report

    def run(self, theorems: Optional[List[str]] = None) -> List[BoundReport]:
        checks = {
            "l2": self.check_l2,
            "l1": self.check_l1,
            "linrep": self.check_linrep,
            "sandwich": self.check_sandwich,
            "lower": self.check_lower,
        }
        names = theorems or list(checks)
        unknown = [t for t in names if t not in checks]
        if unknown:
            raise InputError(f"unknown theorem ids {unknown}")
        return [checks[t]() for t in names]


def check_l2(k: int, pair1: RegressionPair, pair2: RegressionPair) -> BoundReport:
    return BoundVerifier(k, pair1, pair2).check_l2()


def check_l1(k: int, pair1: RegressionPair, pair2: RegressionPair) -> BoundReport:
    return BoundVerifier(k, pair1, pair2).check_l1()


def check_linrep(k: int, pair1: RegressionPair, pair2: RegressionPair) -> BoundReport:
    return BoundVerifier(k, pair1, pair2).check_linrep()


def check_sandwich(k: int, pair1: RegressionPair, pair2: RegressionPair) -> BoundReport:
    return BoundVerifier(k, pair1, pair2).check_sandwich()


def check_lower(k: int, pair1: RegressionPair, pair2: RegressionPair) -> BoundReport:
    return BoundVerifier(k, pair1, pair2).check_lower()


def random_test_pairs(p: int, k: int, rng: np.random.Generator, ratio: float = 0.45) -> Tuple[RegressionPair, RegressionPair]:
    """
    Random (pair1, pair2) with RIP(k, Sigma1 - Sigma2) = ratio * Lambda(k; Sigma2).

    Sigma2 = BᵀB / m + I/2 from m = 2p Gaussian rows; Sigma1 adds a scaled
    symmetric Gaussian perturbation. ratio < 1/2 makes every check applicable,
    ratio > 1 makes the uniform bounds silent.

    Args:
        p: dimension
        k: model size the ratio refers to
        rng: numpy Generator
        ratio: target RIP / Lambda

    Returns:
        (pair1, pair2)
    """
    m = 2 * p
    b = rng.standard_normal((m, p))
    sigma2 = SymmetricMatrix.symmetrized(b.T @ b / m + 0.5 * np.eye(p))
    noise = rng.standard_normal((p, p))
    noise = SymmetricMatrix.symmetrized(noise + noise.T)
    scale = rip(k, noise).value
    lam = lambda_sparse(k, sigma2).value
    eps = ratio * lam / scale if scale > 0 else 0.0
    sigma1 = sigma2 + noise * eps
    gamma2 = rng.standard_normal(p)
    gamma1 = gamma2 + 0.1 * rng.standard_normal(p)
    return RegressionPair(sigma1, gamma1), RegressionPair(sigma2, gamma2)
