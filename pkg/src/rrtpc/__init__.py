"""Geometric and kinodynamic RRT with computable completeness bounds."""

from rrtpc.errors import IntegrationError, ParseError, UsageError

__version__ = "0.1.0"

__all__ = ["IntegrationError", "ParseError", "UsageError", "__version__"]
