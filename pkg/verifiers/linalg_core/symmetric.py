"""
Dense symmetric linear algebra for small principal submatrices.
"""
import logging
from typing import Dict, Iterable, NamedTuple, Sequence, Tuple, Union

import numpy as np

from verifiers.errors import InputError, NumericalError, SingularModelError

logger = logging.getLogger(__name__)

ModelIndex = Tuple[int, ...]

SYMMETRY_TOL = 1e-12
PIVOT_TOL = 1e-12
JACOBI_TOL = 1e-10
MAX_SWEEPS = 100


class SymmetricMatrix:
    """Immutable dense symmetric matrix.

    Only the upper triangle of the input is read; the lower triangle is its
    mirror, so ``entry(j, l) == entry(l, j)`` holds bit-for-bit.
    """

    __slots__ = ("_values",)

    def __init__(self, entries: Union[Sequence[Sequence[float]], np.ndarray], check: bool = True):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InputError(f"symmetric matrix needs a nonempty square array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InputError("symmetric matrix entries must be finite")
        if check:
            scale = 1.0 + float(np.max(np.abs(a)))
            asym = float(np.max(np.abs(a - a.T)))
            if asym > SYMMETRY_TOL * scale:
                raise InputError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
        upper = np.triu(a)
        values = upper + np.triu(a, 1).T
        values.flags.writeable = False
        self._values = values

    @classmethod
    def symmetrized(cls, entries: np.ndarray) -> "SymmetricMatrix":
        """Build from (A + Aᵀ)/2; for products that are symmetric only up to rounding."""
        a = np.asarray(entries, dtype=float)
        return cls(0.5 * (a + a.T), check=False)

    @classmethod
    def identity(cls, dim: int) -> "SymmetricMatrix":
        return cls(np.eye(dim), check=False)

    @classmethod
    def zeros(cls, dim: int) -> "SymmetricMatrix":
        return cls(np.zeros((dim, dim)), check=False)

    @property
    def dim(self) -> int:
        return self._values.shape[0]

    @property
    def values(self) -> np.ndarray:
        """Read-only full array view."""
        return self._values

    def entry(self, j: int, l: int) -> float:
        return float(self._values[j, l])

    def __add__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        return SymmetricMatrix(self._values + _coerce(other).values, check=False)

    def __sub__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        return SymmetricMatrix(self._values - _coerce(other).values, check=False)

    def __neg__(self) -> "SymmetricMatrix":
        return SymmetricMatrix(-self._values, check=False)

    def __mul__(self, c: float) -> "SymmetricMatrix":
        return SymmetricMatrix(float(c) * self._values, check=False)

    __rmul__ = __mul__

    def __matmul__(self, v: np.ndarray) -> np.ndarray:
        return self._values @ np.asarray(v, dtype=float)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        return self._values.shape == other.values.shape and bool(np.array_equal(self._values, other.values))

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __repr__(self) -> str:
        return f"SymmetricMatrix(dim={self.dim})"


def _coerce(a: Union["SymmetricMatrix", np.ndarray]) -> SymmetricMatrix:
    return a if isinstance(a, SymmetricMatrix) else SymmetricMatrix(a)


def as_vector(v: Union[Sequence[float], np.ndarray], dim: int = None) -> np.ndarray:
    """Validate a real vector: 1-D, finite, optionally of a given length."""
    x = np.asarray(v, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise InputError(f"expected a nonempty 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("vector entries must be finite")
    if dim is not None and x.size != dim:
        raise InputError(f"vector has length {x.size}, expected {dim}")
    return x


def as_model(indices: Iterable[int], p: int = None) -> ModelIndex:
    """Validate a model index: nonempty, strictly increasing, each < p."""
    model = tuple(int(i) for i in indices)
    if not model:
        raise InputError("model must be nonempty")
    if any(b <= a for a, b in zip(model, model[1:])):
        raise InputError(f"model indices must be strictly increasing: {model}")
    if model[0] < 0 or (p is not None and model[-1] >= p):
        raise InputError(f"model {model} out of range for p={p}")
    return model


def submatrix(a: SymmetricMatrix, model: Sequence[int]) -> SymmetricMatrix:
    """Principal submatrix A(M)."""
    m = as_model(model, a.dim)
    idx = np.array(m)
    return SymmetricMatrix(a.values[np.ix_(idx, idx)], check=False)


def cholesky_factor(a: SymmetricMatrix, model: Sequence[int] = None) -> np.ndarray:
    """Lower Cholesky factor with the relative pivot test.

    Raises:
        SingularModelError: pivot <= dim * 1e-12 * max diagonal
    """
    m = a.values
    n = a.dim
    max_diag = float(np.max(np.diag(m)))
    threshold = n * PIVOT_TOL * max_diag
    if max_diag <= 0.0:
        raise SingularModelError("nonpositive diagonal", model)
    lower = np.zeros((n, n))
    for j in range(n):
        row = lower[j, :j]
        pivot = m[j, j] - float(row @ row)
        if pivot <= threshold:
            raise SingularModelError(f"pivot {pivot:.3e} at position {j} below threshold {threshold:.3e}", model)
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1:, j] = (m[j + 1:, j] - lower[j + 1:, :j] @ row) / lower[j, j]
    return lower


def _solve_factored(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = lower.shape[0]
    z = np.zeros(n)
    for i in range(n):
        z[i] = (b[i] - lower[i, :i] @ z[:i]) / lower[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (z[i] - lower[i + 1:, i] @ x[i + 1:]) / lower[i, i]
    return x


def solve_spd(a: SymmetricMatrix, b: Union[Sequence[float], np.ndarray], model: Sequence[int] = None) -> np.ndarray:
    """
    Solve A x = b for symmetric positive definite A.

    Args:
        a: SPD matrix
        b: right-hand side of length a.dim
        model: optional model label attached to a SingularModelError

    Returns:
        Solution vector x
    """
    rhs = as_vector(b, a.dim)
    lower = cholesky_factor(a, model)
    x = _solve_factored(lower, rhs)
    # one refinement step keeps the residual contract on moderately conditioned inputs
    residual = rhs - a.values @ x
    x = x + _solve_factored(lower, residual)
    return x


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int


def jacobi_eigh(a: SymmetricMatrix) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition.

    Sweeps until the off-diagonal Frobenius norm is below
    1e-10 * (1 + max |entry|). Eigenvalues are returned ascending with
    matching eigenvector columns.
    """
    work = np.array(a.values, dtype=float)
    n = a.dim
    vectors = np.eye(n)
    threshold = JACOBI_TOL * (1.0 + float(np.max(np.abs(work))))

    def off_norm() -> float:
        return float(np.sqrt(np.sum(work ** 2) - np.sum(np.diag(work) ** 2)))

    sweeps = 0
    off = off_norm() if n > 1 else 0.0
    while off >= threshold:
        if sweeps >= MAX_SWEEPS:
            raise NumericalError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps", residual=off)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if apq == 0.0:
                    continue
                theta = (work[q, q] - work[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0.0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * col_q
                work[:, q] = s * col_p + c * col_q
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * row_q
                work[q, :] = s * row_p + c * row_q
                work[p, q] = 0.0
                work[q, p] = 0.0
                vec_p = vectors[:, p].copy()
                vec_q = vectors[:, q].copy()
                vectors[:, p] = c * vec_p - s * vec_q
                vectors[:, q] = s * vec_p + c * vec_q
        sweeps += 1
        off = off_norm()
    eigenvalues = np.diag(work).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return EigenDecomposition(eigenvalues[order], vectors[:, order], sweeps)


def eig_extremes(a: SymmetricMatrix) -> Tuple[float, float]:
    """(lambda_min, lambda_max) of a symmetric matrix."""
    if a.dim == 1:
        value = a.entry(0, 0)
        return value, value
    if a.dim == 2:
        # closed form for 2x2; agrees with Jacobi to rounding
        x, y, z = a.entry(0, 0), a.entry(0, 1), a.entry(1, 1)
        mid = 0.5 * (x + z)
        rad = float(np.hypot(0.5 * (x - z), y))
        return mid - rad, mid + rad
    values = jacobi_eigh(a).eigenvalues
    return float(values[0]), float(values[-1])


def op_norm(a: SymmetricMatrix) -> float:
    """Operator norm max(|lambda_min|, |lambda_max|)."""
    lo, hi = eig_extremes(a)
    return max(abs(lo), abs(hi))


class VectorNorms(NamedTuple):
    l1: float
    l2: float
    linf: float
    l0: int


def vector_norms(v: Union[Sequence[float], np.ndarray]) -> VectorNorms:
    x = as_vector(v)
    return VectorNorms(
        l1=float(np.sum(np.abs(x))),
        l2=float(np.sqrt(x @ x)),
        linf=float(np.max(np.abs(x))),
        l0=int(np.count_nonzero(x)),
    )


def max_entry_norm(a: Union[SymmetricMatrix, np.ndarray]) -> float:
    """|||A|||_inf, the maximum absolute entry."""
    values = a.values if isinstance(a, SymmetricMatrix) else np.asarray(a, dtype=float)
    return float(np.max(np.abs(values)))


def norms(x: Union[SymmetricMatrix, Sequence[float], np.ndarray]) -> Dict[str, float]:
    """Norm summary of a vector (l1, l2, linf, l0) or a symmetric matrix (max_entry)."""
    if isinstance(x, SymmetricMatrix):
        return {"max_entry": max_entry_norm(x)}
    return dict(vector_norms(x)._asdict())
