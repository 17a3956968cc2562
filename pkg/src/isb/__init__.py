"""Finite-strain isogeometric solid-beam solver and benchmark suite."""

from .element import Formulation
from .errors import (
    AmbiguousCouplingError,
    CondensationError,
    ConfigError,
    DomainError,
    GeometryError,
    InvertedElementError,
    IsbError,
    StepFailure,
    UnsupportedError,
    ValidationError,
)
from .materials import MaterialModel, lame_from_engineering
from .solver import Model, SolverConfig, newton_solve

__all__ = [
    "Formulation",
    "MaterialModel",
    "Model",
    "SolverConfig",
    "newton_solve",
    "lame_from_engineering",
    "IsbError",
    "ValidationError",
    "ConfigError",
    "DomainError",
    "UnsupportedError",
    "GeometryError",
    "AmbiguousCouplingError",
    "InvertedElementError",
    "CondensationError",
    "StepFailure",
]

__version__ = "0.1.0"
