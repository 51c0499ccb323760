"""Particle-field solver for the relativistic Vlasov-Maxwell system on hyperboloidal slices."""
from .errors import (
    AdmissibilityError,
    ConfigurationError,
    DomainError,
    HistoryError,
    NeutralityError,
    NonFiniteError,
    WindowError,
)
from .scenarios import RunConfig, build_problem, load_config

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ConfigurationError",
    "DomainError",
    "HistoryError",
    "NeutralityError",
    "NonFiniteError",
    "WindowError",
    "RunConfig",
    "build_problem",
    "load_config",
]
