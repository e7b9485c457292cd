"""Fractional Poisson process: series, generator ODE, cluster embedding and Monte Carlo."""

from .errors import (
    ContractError,
    DomainError,
    FracPoissonError,
    IntegrationError,
    NumericOverflowError,
    PrecisionError,
    RunawayError,
)
from .specfun import ProcessParams, gamma, log_gamma, mittag_leffler

__version__ = "0.1.0"

__all__ = [
    "ProcessParams",
    "gamma",
    "log_gamma",
    "mittag_leffler",
    "FracPoissonError",
    "DomainError",
    "ContractError",
    "PrecisionError",
    "NumericOverflowError",
    "IntegrationError",
    "RunawayError",
    "__version__",
]
