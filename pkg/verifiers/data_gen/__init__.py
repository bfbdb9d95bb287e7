"""Data generation module."""
from .generators import (
    CausalSpec,
    CoefficientLaw,
    DesignLaw,
    IndepSpec,
    InnovationLaw,
    InnovationTape,
    NoiseLaw,
    PopulationPair,
    ResponseLink,
    causal_values,
    draw_law,
    gen_causal,
    gen_independent,
    lag_autocovariance,
    population_pair,
    replay,
    replay_coupled,
    stationary_mean,
)
from .rng import stream, stream_id

__all__ = [
    "CausalSpec",
    "CoefficientLaw",
    "DesignLaw",
    "IndepSpec",
    "InnovationLaw",
    "InnovationTape",
    "NoiseLaw",
    "PopulationPair",
    "ResponseLink",
    "causal_values",
    "draw_law",
    "gen_causal",
    "gen_independent",
    "lag_autocovariance",
    "population_pair",
    "replay",
    "replay_coupled",
    "stationary_mean",
    "stream",
    "stream_id",
]
