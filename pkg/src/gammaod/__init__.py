"""Numerical checks of orderly divergence for Gamma stochastic integrals."""
from importlib import metadata as _metadata

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # pragma: no cover
    __version__ = "0.1.0"

from .errors import DomainError, ExecutionError, QuadratureError, UsageError  # noqa: E402
from .integrands import catalog, parse  # noqa: E402

__all__ = ["DomainError", "ExecutionError", "QuadratureError", "UsageError", "catalog", "parse",
           "__version__"]
