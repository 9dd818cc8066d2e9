"""Extremal section-hyperbolic polynomials and the partial theta function."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    BracketError, ConstructionError, ContractError, ConvergenceError, DegenerateError, DomainError,
    IncompleteEnumeration, IndeterminateError, PrecisionError, SectionHypError, SeedError, TrackingError,
)
from .poly import Poly  # noqa: F401
from .precision import PrecisionContext, default_context  # noqa: F401
