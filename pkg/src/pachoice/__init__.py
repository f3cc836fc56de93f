"""Preferential attachment with location-based choice."""
from ._validation import ChoiceVector, ValidationError, check_alpha, check_xi
from .config import ModelConfig, load_config
from .engine import GraphState, run
from .trajectory import Trajectory

__version__ = "0.1.0"

__all__ = [
    "ChoiceVector", "GraphState", "ModelConfig", "Trajectory", "ValidationError",
    "__version__", "check_alpha", "check_xi", "load_config", "run",
]
