"""Linear algebra core module."""
from .symmetric import (
    EigenDecomposition,
    ModelIndex,
    SymmetricMatrix,
    VectorNorms,
    as_model,
    as_vector,
    cholesky_factor,
    eig_extremes,
    jacobi_eigh,
    max_entry_norm,
    norms,
    op_norm,
    solve_spd,
    submatrix,
    vector_norms,
)

__all__ = [
    "EigenDecomposition",
    "ModelIndex",
    "SymmetricMatrix",
    "VectorNorms",
    "as_model",
    "as_vector",
    "cholesky_factor",
    "eig_extremes",
    "jacobi_eigh",
    "max_entry_norm",
    "norms",
    "op_norm",
    "solve_spd",
    "submatrix",
    "vector_norms",
]
