"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(RuntimeError):
    """An operation was called on an input whose metadata does not permit it
    (e.g. a bracket requested for a non-monotone integrand)."""


class QuadratureError(RuntimeError):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, message, achieved_error=float("nan")):
        super().__init__(f"{message} (achieved error {achieved_error:.3g})")
        self.achieved_error = achieved_error


class ExecutionError(RuntimeError):
    """A computation could not be carried out with the available resources
    (grid too large, bracket too wide after refinement)."""
