"""exceptions shared across relspec modules"""

from typing import Optional


class RelspecError(Exception):
    """Base class for all errors raised by relspec"""

    pass


class DomainError(RelspecError, ValueError):
    """
    Raised when an argument lies outside the domain of an operation

    For example, evaluating the bosonic statistical function at x <= 0
    or asking for a zeta value at s <= n.
    """

    pass


class KindMismatchError(DomainError):
    """Raised when a laplace spectrum is passed where a dirac one is required (or vice versa)"""

    pass


class UnsupportedError(RelspecError):
    """
    Raised when a requested combination is not implemented

    This covers things that are well-defined mathematically but outside of what
    relspec can evaluate, like V_b in dimension 3 or a Dirac shift with unequal scales.
    """

    pass


class NumericError(RelspecError):
    """Raised when a linear algebra routine fails (e.g. diagonalization does not converge)"""

    pass


class FitError(RelspecError):
    """Raised when an asymptotic fit is ill-conditioned or underdetermined"""

    pass


class SpectralFormatError(RelspecError):
    """Raised when a serialized operator pair cannot be read"""

    pass


class AccuracyError(RelspecError):
    """
    Raised when a numerical routine cannot reach its requested tolerance

    The best value found and its error estimate are kept on the exception,
    so callers can still decide to use them.

    Parameters
    ----------
    message: str
        what failed
    value: float, optional
        best available value
    error_estimate: float, optional
        error estimate attached to `value`
    """

    def __init__(
        self, message: str, value: Optional[float] = None, error_estimate: Optional[float] = None
    ):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class ConfigError(RelspecError):
    """
    Raised when a config file is invalid

    Parameters
    ----------
    field: str
        dotted path of the offending field, e.g. "model.m"
    message: str
        what is wrong with it
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"invalid config field '{field}': {message}")
        self.field = field
