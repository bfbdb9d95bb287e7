"""M-estimation module."""
from .mest import (
    LossSpec,
    MEstRecord,
    MEstReport,
    PopulationTarget,
    check_model,
    check_model_class,
    delta_nm,
    fit_mest,
    jhat,
    objective,
    population_hessian,
    population_target,
    population_targets,
    standard_errors,
    zhat,
)

__all__ = [
    "LossSpec",
    "MEstRecord",
    "MEstReport",
    "PopulationTarget",
    "check_model",
    "check_model_class",
    "delta_nm",
    "fit_mest",
    "jhat",
    "objective",
    "population_hessian",
    "population_target",
    "population_targets",
    "standard_errors",
    "zhat",
]
