"""Uniform-in-model least squares: exhaustive subset regression, sparse error norms and bound verification."""

__version__ = "0.1.0"
