"""
Per-model M-estimation for smooth convex losses and the deterministic
consistency / representation check on the curvature-stability event.
"""
import itertools
import logging
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from verifiers.data_gen import IndepSpec, gen_independent, population_pair
from verifiers.errors import InputError, NonConvergenceError, SingularModelError
from verifiers.linalg_core import ModelIndex, SymmetricMatrix, as_model, as_vector, eig_extremes, op_norm, solve_spd, submatrix
from verifiers.model_space import ModelClassSpec, map_chunks
from verifiers.regression_core import Dataset, beta_map

logger = logging.getLogger(__name__)

GRAD_TOL = 1e-10
MAX_ITER = 100
ARMIJO = 1e-4
MAX_HALVINGS = 30
EVENT_CAP = 1.5
CHECK_SLACK = 1e-8
MAX_EXACT_COLUMNS = 20
TARGET_DRAWS_FACTOR = 100
TARGET_STDERR_SHARE = 0.01


def _sigmoid(u: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * u))


class LossSpec:
    """
    Loss L(y, u) with its first two u-derivatives.

    Args:
        name: "squared", "logistic" (labels in {0, 1}) or "poisson"
        c_plus: "sharp" uses exp(u) for logistic/Poisson, "loose" uses exp(3u)
        weight: h_M, a nonnegative function of the rows X_i(M); constant 1 when None
    """

    NAMES = ("squared", "logistic", "poisson")

    def __init__(self, name: str, c_plus: str = "sharp", weight: Optional[Callable[[np.ndarray], np.ndarray]] = None):
        if name not in self.NAMES:
            raise InputError(f"unknown loss {name}; expected one of {self.NAMES}")
        if c_plus not in ("sharp", "loose"):
            raise InputError(f"c_plus must be 'sharp' or 'loose', got {c_plus}")
        self.name = name
        self.c_plus = c_plus
        self.weight = weight

    def value(self, y: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.name == "squared":
            return (y - u) ** 2
        if self.name == "logistic":
            return np.logaddexp(0.0, u) - y * u
        return np.exp(u) - y * u

    def first(self, y: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.name == "squared":
            return 2.0 * (u - y)
        if self.name == "logistic":
            return _sigmoid(u) - y
        return np.exp(u) - y

    def second(self, y: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.name == "squared":
            return np.full(np.shape(u), 2.0)
        if self.name == "logistic":
            s = _sigmoid(u)
            return s * (1.0 - s)
        return np.exp(u)

    def c_plus_bound(self, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Upper bound on sup_{|s-t|<=u} L''(y,s)/L''(y,t), independent of y."""
        u = np.asarray(u, dtype=float)
        if self.name == "squared":
            out = np.ones_like(u)
        else:
            out = np.exp((3.0 if self.c_plus == "loose" else 1.0) * u)
        return float(out) if out.ndim == 0 else out

    def weights(self, xm: np.ndarray) -> np.ndarray:
        if self.weight is None:
            return np.ones(xm.shape[0])
        w = np.asarray(self.weight(xm), dtype=float)
        if np.any(w < 0):
            raise InputError("weight function must be nonnegative")
        return w

    def check_convex(self, grid: Optional[np.ndarray] = None, labels: Sequence[float] = (0.0, 1.0)) -> bool:
        grid = np.linspace(-20.0, 20.0, 401) if grid is None else grid
        return all(bool(np.all(self.second(np.full_like(grid, y), grid) >= 0.0)) for y in labels)

    def __repr__(self) -> str:
        return f"LossSpec({self.name}, c_plus={self.c_plus})"


class _Problem(NamedTuple):
    """Weighted objective sum_i w_i L(y_i, x_iᵀθ) with weights summing to one."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    loss: LossSpec

    def objective(self, theta: np.ndarray) -> float:
        return float(self.w @ self.loss.value(self.y, self.x @ theta))

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        return self.x.T @ (self.w * self.loss.first(self.y, self.x @ theta))

    def hessian(self, theta: np.ndarray) -> SymmetricMatrix:
        curvature = self.w * self.loss.second(self.y, self.x @ theta)
        return SymmetricMatrix.symmetrized((self.x * curvature[:, None]).T @ self.x)


def _problem(d: Dataset, loss: LossSpec, model: Sequence[int]) -> _Problem:
    m = as_model(model, d.p)
    xm = d.x[:, list(m)]
    return _Problem(xm, d.y, loss.weights(xm) / d.n, loss)


def _newton(problem: _Problem, model: ModelIndex, tol: float, max_iter: int = MAX_ITER) -> np.ndarray:
    theta = np.zeros(problem.x.shape[1])
    f = problem.objective(theta)
    for it in range(max_iter + 1):
        g = problem.gradient(theta)
        if float(np.max(np.abs(g))) <= tol:
            return theta
        if it == max_iter:
            break
        step = solve_spd(problem.hessian(theta), g, model=model)
        decrease = float(g @ step)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            candidate = theta - t * step
            fc = problem.objective(candidate)
            if fc <= f - ARMIJO * t * decrease + 64.0 * np.finfo(float).eps * (1.0 + abs(f)):
                break
            t *= 0.5
        else:
            raise NonConvergenceError(f"line search failed for model {model} at iteration {it}")
        theta, f = candidate, fc
    raise NonConvergenceError(f"Newton did not reach gradient tolerance {tol:.1e} for model {model} in {max_iter} iterations")


def fit_mest(d: Dataset, loss: LossSpec, model: Sequence[int], max_iter: int = MAX_ITER) -> np.ndarray:
    """
    argmin over theta of (1/n) sum h_M L(Y_i, X_i(M)ᵀ theta).

    Newton iterations from zero with step halving; stops once
    ||Z_hat||_inf <= 1e-10 (1 + ||Gamma_hat||_inf).

    Raises:
        NonConvergenceError: iteration cap reached (separation or ill-conditioning)
        SingularModelError: the Hessian failed the pivot test
    """
    m = as_model(model, d.p)
    problem = _problem(d, loss, m)
    gamma_hat = problem.x.T @ d.y / d.n
    tol = GRAD_TOL * (1.0 + float(np.max(np.abs(gamma_hat))))
    return _newton(problem, m, tol, max_iter)


def objective(d: Dataset, loss: LossSpec, model: Sequence[int], theta: np.ndarray) -> float:
    problem = _problem(d, loss, model)
    return problem.objective(as_vector(theta, problem.x.shape[1]))


def zhat(d: Dataset, loss: LossSpec, model: Sequence[int], theta: np.ndarray) -> np.ndarray:
    """(1/n) sum h_M L'(Y_i, X_i(M)ᵀ theta) X_i(M)."""
    problem = _problem(d, loss, model)
    return problem.gradient(as_vector(theta, problem.x.shape[1]))


def jhat(d: Dataset, loss: LossSpec, model: Sequence[int], theta: np.ndarray) -> SymmetricMatrix:
    """(1/n) sum h_M L''(Y_i, X_i(M)ᵀ theta) X_i(M) X_i(M)ᵀ."""
    problem = _problem(d, loss, model)
    return problem.hessian(as_vector(theta, problem.x.shape[1]))


def delta_nm(d: Dataset, loss: LossSpec, model: Sequence[int], beta_target: np.ndarray) -> float:
    """||J_hat(beta)^{-1} Z_hat(beta)||_2 at the target."""
    m = as_model(model, d.p)
    step = solve_spd(jhat(d, loss, m, beta_target), zhat(d, loss, m, beta_target), model=m)
    return float(np.sqrt(step @ step))


def standard_errors(d: Dataset, loss: LossSpec, model: Sequence[int], beta_hat: np.ndarray) -> np.ndarray:
    """Sandwich standard errors from the inverse empirical Hessian."""
    m = as_model(model, d.p)
    problem = _problem(d, loss, m)
    beta_hat = as_vector(beta_hat, len(m))
    scores = problem.x * (problem.w * d.n * loss.first(d.y, problem.x @ beta_hat))[:, None]
    meat = scores.T @ scores / d.n
    hessian = problem.hessian(beta_hat)
    bread = np.column_stack([solve_spd(hessian, col, model=m) for col in np.eye(len(m))])
    return np.sqrt(np.diag(bread @ meat @ bread) / d.n)


class PopulationTarget(NamedTuple):
    beta: np.ndarray
    hessian: SymmetricMatrix
    stderr: float
    provenance: str


def _conditional_mean(spec: IndepSpec, x: np.ndarray) -> np.ndarray:
    mu = spec.response.mean(x)
    if spec.response.family == "logistic":
        return _sigmoid(mu)
    if spec.response.family == "poisson":
        return np.exp(mu)
    return mu


def _design_support(spec: IndepSpec) -> np.ndarray:
    q = spec.random_columns
    corners = spec.design.scale * np.array(list(itertools.product((-1.0, 1.0), repeat=q)))
    if spec.intercept:
        corners = np.column_stack([np.ones(corners.shape[0]), corners])
    return corners


def _exact_target(spec: IndepSpec, loss: LossSpec, m: ModelIndex) -> PopulationTarget:
    """Targets on the finite Rademacher support; E[Y | X] replaces Y since L' is affine in y."""
    support = _design_support(spec)
    xm = support[:, list(m)]
    w = loss.weights(xm) / support.shape[0]
    problem = _Problem(xm, _conditional_mean(spec, support), w, loss)
    beta = _newton(problem, m, GRAD_TOL)
    return PopulationTarget(beta, problem.hessian(beta), 0.0, f"exact({support.shape[0]} support points)")


def _monte_carlo_target(spec: IndepSpec, loss: LossSpec, m: ModelIndex, draws: int, seed: int) -> PopulationTarget:
    sample = gen_independent(spec, draws, seed, "mest-target")
    beta = fit_mest(sample, loss, m)
    se = standard_errors(sample, loss, m, beta)
    return PopulationTarget(beta, jhat(sample, loss, m, beta), float(np.sqrt(se @ se)), f"monte_carlo({draws})")


def _squared_target(spec, m: ModelIndex, n: Optional[int], seed: int, draws: int) -> PopulationTarget:
    pp = population_pair(spec, n=n, seed=seed, draws=draws)
    beta = beta_map(pp.pair, m)
    stderr = 0.0
    if pp.gamma_stderr is not None and pp.sigma_stderr is not None:
        idx = list(m)
        spread = np.linalg.norm(pp.gamma_stderr[idx]) + np.linalg.norm(pp.sigma_stderr[np.ix_(idx, idx)]) * np.linalg.norm(beta)
        lam = eig_extremes(submatrix(pp.pair.sigma, m))[0]
        stderr = float(spread / lam)
    return PopulationTarget(beta, submatrix(pp.pair.sigma, m) * 2.0, stderr, pp.provenance)


def population_target(
    spec, loss: LossSpec, model: Sequence[int], n: Optional[int] = None, seed: int = 0, draws: Optional[int] = None
) -> PopulationTarget:
    """
    Population minimizer beta_{n,M} and J_bar = E[h L'' X(M) X(M)ᵀ] at it.

    Squared loss uses the population pair; Rademacher designs are summed over
    their finite support; anything else is fitted on 100 n fresh draws.

    Args:
        spec: IndepSpec (squared loss also accepts a CausalSpec)
        loss: loss specification
        model: model M
        n: sample size of the data the target is compared with
        seed: seed for Monte Carlo targets
        draws: Monte Carlo size, default 100 n

    Returns:
        PopulationTarget
    """
    p = spec.p
    m = as_model(model, p)
    if draws is None:
        draws = TARGET_DRAWS_FACTOR * n if n is not None else 1_000_000
    if loss.name == "squared" and loss.weight is None:
        return _squared_target(spec, m, n, seed, draws)
    if not isinstance(spec, IndepSpec):
        raise InputError(f"{loss.name} targets need an independent spec")
    if spec.design.kind == "rademacher" and spec.random_columns <= MAX_EXACT_COLUMNS:
        return _exact_target(spec, loss, m)
    return _monte_carlo_target(spec, loss, m, draws, seed)


def population_hessian(spec, loss: LossSpec, model: Sequence[int], n: Optional[int] = None, seed: int = 0) -> SymmetricMatrix:
    return population_target(spec, loss, model, n=n, seed=seed).hessian


class MEstRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: str
    status: str
    beta_hat: List[float] = Field(default_factory=list)
    beta_target: List[float] = Field(default_factory=list)
    delta: Optional[float] = None
    error: Optional[float] = None
    c_plus_max: Optional[float] = None
    event: Optional[bool] = None
    sandwich_lower: Optional[bool] = None
    sandwich_upper: Optional[bool] = None
    rep_lhs: Optional[float] = None
    rep_rhs: Optional[float] = None
    rep_holds: Optional[bool] = None
    Delta: Optional[float] = None
    target_stderr: float = 0.0

    @property
    def asserted(self) -> bool:
        return self.status == "applicable"

    @property
    def passed(self) -> bool:
        return not self.asserted or bool(self.sandwich_lower and self.sandwich_upper and self.rep_holds)


class MEstReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    loss: str
    k: int
    n: int
    records: List[MEstRecord] = Field(default_factory=list)

    @property
    def event(self) -> bool:
        """The event over every model where it was evaluated."""
        return all(r.event for r in self.records if r.event is not None)

    @property
    def unevaluated(self) -> List[str]:
        """Models whose event could not be evaluated (singular, nonconvergent or without a target)."""
        return [r.model for r in self.records if r.event is None]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def failures(self) -> List[MEstRecord]:
        return [r for r in self.records if not r.passed]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for r in self.records:
            checks = [
                ("mest.sandwich.lower", None if r.delta is None else r.delta / 2.0, r.error, r.sandwich_lower),
                ("mest.sandwich.upper", r.error, None if r.delta is None else 2.0 * r.delta, r.sandwich_upper),
                ("mest.rep", r.rep_lhs, r.rep_rhs, r.rep_holds),
            ]
            for theorem, lhs, rhs, holds in checks:
                slack = rhs - lhs if lhs is not None and rhs is not None else None
                rows.append({"theorem": theorem, "model": r.model, "lhs": lhs, "rhs": rhs, "holds": holds,
                             "slack": slack, "event": r.event, "status": r.status})
        return pd.DataFrame(rows, columns=["theorem", "model", "lhs", "rhs", "holds", "slack", "event", "status"])


def _label(m: ModelIndex) -> str:
    return "{" + ",".join(str(j) for j in m) + "}"


def _within(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + CHECK_SLACK * (1.0 + abs(rhs))


def check_model(d: Dataset, loss: LossSpec, model: Sequence[int], target: PopulationTarget) -> MEstRecord:
    m = as_model(model, d.p)
    label = _label(m)
    try:
        beta_hat = fit_mest(d, loss, m)
        z = zhat(d, loss, m, target.beta)
        j_hat = jhat(d, loss, m, target.beta)
        delta = float(np.linalg.norm(solve_spd(j_hat, z, model=m)))
    except NonConvergenceError as e:
        logger.warning(f"model {label}: {e}")
        return MEstRecord(model=label, status="nonconvergent")
    except SingularModelError as e:
        logger.warning(f"model {label}: {e}")
        return MEstRecord(model=label, status="singular")

    error = float(np.linalg.norm(beta_hat - target.beta))
    reach = 2.0 * float(np.max(np.linalg.norm(d.x[:, list(m)], axis=1))) * delta
    c_plus_max = float(loss.c_plus_bound(reach))
    event = c_plus_max <= EVENT_CAP
    record = MEstRecord(
        model=label,
        status="applicable",
        beta_hat=beta_hat.tolist(),
        beta_target=target.beta.tolist(),
        delta=delta,
        error=error,
        c_plus_max=c_plus_max,
        event=event,
        target_stderr=target.stderr,
    )
    if not event:
        record.status = "not_applicable"
        return record
    if target.stderr > TARGET_STDERR_SHARE * delta:
        logger.warning(f"model {label}: target stderr {target.stderr:.3e} exceeds 1% of delta {delta:.3e}")
        record.status = "target_imprecise"
        return record

    lam = eig_extremes(target.hessian)[0]
    rep_lhs = float(np.linalg.norm(beta_hat - target.beta + solve_spd(target.hessian, z, model=m)))
    Delta = op_norm(j_hat - target.hessian) / lam + (c_plus_max - 1.0)
    record.sandwich_lower = _within(delta / 2.0, error)
    record.sandwich_upper = _within(error, 2.0 * delta)
    record.rep_lhs = rep_lhs
    record.rep_rhs = Delta * delta
    record.rep_holds = _within(rep_lhs, Delta * delta)
    record.Delta = Delta
    return record


def check_model_class(
    d: Dataset,
    loss: LossSpec,
    model_class: Union[int, ModelClassSpec],
    targets: Dict[ModelIndex, PopulationTarget],
    threads: int = 1,
) -> MEstReport:
    """
    Evaluate the event and, where it holds, the sandwich and representation bounds.

    Args:
        d: data
        loss: loss specification
        model_class: k, or a ModelClassSpec
        targets: population targets per model
        threads: worker count

    Returns:
        MEstReport in enumeration order
    """
    spec = model_class if isinstance(model_class, ModelClassSpec) else ModelClassSpec(p=d.p, k=int(model_class))

    def worker(models: Iterator[ModelIndex]) -> List[MEstRecord]:
        out = []
        for m in models:
            if m not in targets:
                out.append(MEstRecord(model=_label(m), status="no_target"))
                continue
            out.append(check_model(d, loss, m, targets[m]))
        return out

    records = [r for part in map_chunks(spec, worker, threads) for r in part]
    report = MEstReport(loss=loss.name, k=spec.k, n=d.n, records=records)
    logger.info(f"M-estimation check: {len(records)} models, event={report.event}, passed={report.passed}")
    if report.unevaluated:
        logger.warning(f"event not evaluated on {len(report.unevaluated)} models: {', '.join(report.unevaluated[:5])}")
    return report


def population_targets(
    spec, loss: LossSpec, k: int, n: int, seed: int = 0, draws: Optional[int] = None, threads: int = 1
) -> Dict[ModelIndex, PopulationTarget]:
    """Targets for every model of size <= k; singular ones are omitted."""
    model_class = ModelClassSpec(p=spec.p, k=k)

    def worker(models: Iterator[ModelIndex]) -> Dict[ModelIndex, PopulationTarget]:
        out = {}
        for m in models:
            try:
                out[m] = population_target(spec, loss, m, n=n, seed=seed, draws=draws)
            except (SingularModelError, NonConvergenceError) as e:
                logger.warning(f"target for model {_label(m)} unavailable: {e}")
        return out

    targets: Dict[ModelIndex, PopulationTarget] = {}
    for part in map_chunks(model_class, worker, threads):
        targets.update(part)
    return targets

