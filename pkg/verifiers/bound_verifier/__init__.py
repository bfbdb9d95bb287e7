"""Bound verifier module."""
from .verifier import (
    APPLICABLE,
    NOT_APPLICABLE,
    VACUOUS,
    BoundRecord,
    BoundReport,
    BoundVerifier,
    check_l1,
    check_l2,
    check_linrep,
    check_lower,
    check_sandwich,
    model_label,
    random_test_pairs,
)

__all__ = [
    "APPLICABLE",
    "NOT_APPLICABLE",
    "VACUOUS",
    "BoundRecord",
    "BoundReport",
    "BoundVerifier",
    "check_l1",
    "check_l2",
    "check_linrep",
    "check_lower",
    "check_sandwich",
    "model_label",
    "random_test_pairs",
]
