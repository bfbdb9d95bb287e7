"""Model space module."""
from .enumeration import (
    ModelClassSpec,
    ModelCount,
    chunk_models,
    count_models,
    enumerate_models,
    first_argmax,
    first_argmin,
    map_chunks,
)

__all__ = [
    "ModelClassSpec",
    "ModelCount",
    "chunk_models",
    "count_models",
    "enumerate_models",
    "first_argmax",
    "first_argmin",
    "map_chunks",
]
