"""Regression core module."""
from .regression import (
    Dataset,
    ModelFit,
    RegressionPair,
    beta_map,
    centered_pair,
    empirical_pair,
    fit_all,
    lin_rep_term,
    noise_corrected_pair,
    rep_error,
)

__all__ = [
    "Dataset",
    "ModelFit",
    "RegressionPair",
    "beta_map",
    "centered_pair",
    "empirical_pair",
    "fit_all",
    "lin_rep_term",
    "noise_corrected_pair",
    "rep_error",
]
