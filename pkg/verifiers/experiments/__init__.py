"""Experiments module."""
from .constants import (
    AppendixConstants,
    SummationCheck,
    appendix_numerics,
    b_nu,
    lambda_ell,
    log2_floor,
    omega_n,
    s_fn,
    summation_check,
    t1,
)
from .rates import RateRow, RateSweep, SlopeFit, draw_dataset, fit_loglog_slope, rate_sweep, slope_frame, slopes_of
from .tails import (
    CAP_FACTORS,
    TailReport,
    TailRow,
    binomial_slack,
    certified_upsilon,
    design_variances,
    net_upsilon,
    psi_norm_bound,
    tail_cap,
    tail_check,
)

__all__ = [
    "AppendixConstants",
    "CAP_FACTORS",
    "RateRow",
    "RateSweep",
    "SlopeFit",
    "SummationCheck",
    "TailReport",
    "TailRow",
    "appendix_numerics",
    "b_nu",
    "binomial_slack",
    "certified_upsilon",
    "design_variances",
    "draw_dataset",
    "fit_loglog_slope",
    "lambda_ell",
    "log2_floor",
    "net_upsilon",
    "omega_n",
    "psi_norm_bound",
    "rate_sweep",
    "s_fn",
    "slope_frame",
    "slopes_of",
    "summation_check",
    "t1",
    "tail_cap",
    "tail_check",
]
