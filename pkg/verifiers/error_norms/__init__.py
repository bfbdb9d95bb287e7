"""Error norms module."""
from .norms import (
    ErrorNormReport,
    SparseExtreme,
    StrengthResult,
    dvec,
    elementwise_bounds,
    error_norm_report,
    lambda_sparse,
    relative_rip,
    rip,
    sparse_max_eigen,
    strength,
    strength_upper_bound,
)

__all__ = [
    "ErrorNormReport",
    "SparseExtreme",
    "StrengthResult",
    "dvec",
    "elementwise_bounds",
    "error_norm_report",
    "lambda_sparse",
    "relative_rip",
    "rip",
    "sparse_max_eigen",
    "strength",
    "strength_upper_bound",
]
