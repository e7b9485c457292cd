"""Exception hierarchy shared by every module.

The CLI maps these onto process exit codes, so new errors should subclass
one of the leaves below rather than :class:`FracPoissonError` directly.
"""


class FracPoissonError(Exception):
    """Base class for all library errors."""


class DomainError(FracPoissonError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(FracPoissonError, ValueError):
    """A structural precondition on an input object is not met."""


class PrecisionError(FracPoissonError, ArithmeticError):
    """A requested accuracy cannot be certified in the working precision."""


class NumericOverflowError(FracPoissonError, OverflowError):
    """A result is not representable as a finite double."""


class IntegrationError(FracPoissonError, RuntimeError):
    """The adaptive ODE stepper could not reach the requested end point."""


class ConservationError(IntegrationError):
    """Probability mass drifted further than the allowed defect."""


class RunawayError(FracPoissonError, RuntimeError):
    """A Monte Carlo path needed an implausible number of draws."""
