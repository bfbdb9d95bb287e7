"""Sparse net module."""
from .net import (
    EPS_GAMMA,
    EPS_SIGMA,
    CoveringResult,
    Ring,
    SparseNet,
    base_net,
    build_net,
    cardinality_bounds,
    certify_rings,
    nearest_distances,
    net_summary,
    net_sup_gamma,
    net_sup_quadratic,
    net_sup_sigma,
    ring_layout,
    sample_theta,
    validate_covering,
)

__all__ = [
    "EPS_GAMMA",
    "EPS_SIGMA",
    "CoveringResult",
    "Ring",
    "SparseNet",
    "base_net",
    "build_net",
    "cardinality_bounds",
    "certify_rings",
    "nearest_distances",
    "net_summary",
    "net_sup_gamma",
    "net_sup_quadratic",
    "net_sup_sigma",
    "ring_layout",
    "sample_theta",
    "validate_covering",
]
