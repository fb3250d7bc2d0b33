"""Liquidation-ruin numerics for a three-barrier spectrally negative Levy surplus."""
from .levy_model import Erlang2, Exponential, LevyModel, Mixture, phi, safety_loading
from .scale_functions import build_scale

__all__ = ["Erlang2", "Exponential", "LevyModel", "Mixture", "phi", "safety_loading", "build_scale"]
__version__ = "0.1.0"
