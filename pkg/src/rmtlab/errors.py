"""Exception types shared across the package."""


class RMTLabError(Exception):
    """Base class for all package errors."""


class DomainError(RMTLabError, ValueError):
    """Argument outside the domain an operation is defined on."""


class PoleError(DomainError):
    """Evaluation requested at (or numerically on top of) a pole or branch cut."""


class AccuracyError(RMTLabError, ArithmeticError):
    """Requested accuracy could not be reached within the configured caps."""


class ConvergenceError(RMTLabError, ArithmeticError):
    """An iterative method did not converge within its iteration cap."""


class SamplingError(RMTLabError, RuntimeError):
    """A sampler ended in a state that makes its output unreliable."""


class NumericOverflowError(RMTLabError, OverflowError):
    """A result does not fit in double precision even after rescaling."""
