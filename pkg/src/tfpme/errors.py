"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class TfpmeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TfpmeError, ValueError):
    """Invalid configuration or parameter value.

    ``key`` names the offending configuration key (dotted path) when known.
    """

    def __init__(self, message: str, key: str | None = None) -> None:
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class DimensionError(TfpmeError, ValueError):
    """Operands built on incompatible bases or with mismatched mode counts."""


class DomainError(TfpmeError, ValueError):
    """Evaluation point outside the domain of definition."""


class HorizonError(TfpmeError, IndexError):
    """Requested step index beyond the precomputed weight horizon."""


class WeightIntegrityError(TfpmeError, ArithmeticError):
    """A Caputo weight or tail sum lost positivity."""


class SolverError(TfpmeError, RuntimeError):
    """A nonlinear solve failed to converge.

    Carries the last residual and, when raised from a time loop, the step index.
    """

    def __init__(self, message: str, residual: float = float("nan"), step: int | None = None) -> None:
        self.residual = residual
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(f"{message} (last residual {residual:.3e})")


class UnsupportedParameterError(TfpmeError, ValueError):
    """Parameter combination outside the range where an operation is defined."""
