"""Dependence lab module."""
from .dependence import (
    Constant,
    DependenceCheckReport,
    DependenceCheckRow,
    DependenceProfile,
    Estimate,
    adjusted_norms,
    analytic_profile,
    build_profile,
    check_moment_domination,
    check_product_process,
    check_sparse_combination,
    estimate_delta,
    gaussian_abs_moment,
)

__all__ = [
    "Constant",
    "DependenceCheckReport",
    "DependenceCheckRow",
    "DependenceProfile",
    "Estimate",
    "adjusted_norms",
    "analytic_profile",
    "build_profile",
    "check_moment_domination",
    "check_product_process",
    "check_sparse_combination",
    "estimate_delta",
    "gaussian_abs_moment",
]
