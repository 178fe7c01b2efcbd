class MovsumError(Exception):
    """Base class for errors raised by this package."""


class InvalidInput(MovsumError, ValueError):
    pass


class DomainError(InvalidInput):
    """Parameters fall outside the validity range of an approximation."""


class SingularInput(MovsumError, ArithmeticError):
    pass


class UnsupportedTolerance(InvalidInput):
    pass


class DegenerateEstimate(MovsumError, ArithmeticError):
    """A Monte Carlo estimate makes a formula undefined (zero denominator)."""


class ConvergenceFailure(MovsumError, ArithmeticError):
    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class RangeError(InvalidInput):
    """A calibration target lies outside what the method can reach."""

    def __init__(self, message, low=None, high=None):
        super().__init__(message)
        self.low = low
        self.high = high
