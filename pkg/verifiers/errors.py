"""
Exception hierarchy for the verification toolkit.
"""
from typing import Optional, Sequence


class UniformRegressionError(Exception):
    """Base class for every error raised by the toolkit."""


class InputError(UniformRegressionError, ValueError):
    """Malformed input: shapes, indices, grids or parameters."""


class SingularModelError(UniformRegressionError):
    """A principal submatrix failed the positive-definiteness pivot test."""

    def __init__(self, message: str, model: Optional[Sequence[int]] = None):
        super().__init__(message)
        self.model = tuple(model) if model is not None else None


class NumericalError(UniformRegressionError):
    """An iterative routine failed, or an exact numeric check was violated."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class NonConvergenceError(UniformRegressionError):
    """Newton iterations hit their cap without reaching stationarity."""


class DomainError(UniformRegressionError, ValueError):
    """A quantity is outside the domain where a formula is defined."""


class ConfigError(UniformRegressionError):
    """Invalid run configuration."""


class NetConstructionError(UniformRegressionError):
    """A sparse net failed its cardinality or covering certificate."""
