"""Moments of characteristic polynomials of random Hermitian matrices, checked
against Monte Carlo sampling and against the Riemann zeta function."""

from . import analytic, contour, ensemble, specialfn, zetalab
from .errors import (AccuracyError, ConvergenceError, DomainError, NumericOverflowError, PoleError,
                     RMTLabError, SamplingError)

__version__ = "0.1.0"

__all__ = [
    "analytic", "contour", "ensemble", "specialfn", "zetalab",
    "AccuracyError", "ConvergenceError", "DomainError", "NumericOverflowError", "PoleError",
    "RMTLabError", "SamplingError",
]
