"""Exceptions raised by the secrecy-relay library.

The CLI maps InvalidParameterError (also when wrapped in a GridPointError)
to exit code 2 and every other SecrecyRelayError to exit code 3.
"""

from typing import Optional


class SecrecyRelayError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(SecrecyRelayError, ValueError):
    """A parameter is outside its documented domain."""


class QuadratureConvergenceError(SecrecyRelayError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(
        self,
        message: str,
        best_estimate: float,
        error_estimate: float,
        detail: Optional[str] = None,
    ) -> None:
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate
        self.detail = detail


class MonotonicityError(SecrecyRelayError):
    """P_so increased with R_e by more than the quadrature error allows."""


class OptimizationError(SecrecyRelayError):
    """The optimiser could not bracket or evaluate its objective."""


class GridPointError(SecrecyRelayError):
    """A queued task failed; carries the grid index and label of the failing point."""

    def __init__(self, index: int, label: str, cause: BaseException) -> None:
        super().__init__(f"grid point {index} ({label}) failed: {cause}")
        self.index = index
        self.label = label
        self.cause = cause

    @property
    def root_cause(self) -> BaseException:
        """The innermost failure, through grid points nested in grid points (e.g. Monte Carlo blocks)."""
        cause = self.cause
        while isinstance(cause, GridPointError):
            cause = cause.cause
        return cause
