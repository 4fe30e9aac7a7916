"""Exception hierarchy shared by every module."""


class QRGError(Exception):
    """Base class for all package errors."""


class ArgumentError(QRGError, ValueError):
    """Malformed or inconsistent input (shapes, labels, dimensions)."""


class InstanceTooLargeError(QRGError):
    """Requested instance exceeds a configured size cap."""


class PreconditionError(QRGError):
    """An operation's documented precondition does not hold."""


class CovarianceError(PreconditionError):
    """A game or measurement is not covariant under the supplied action."""

    def __init__(self, message, pair=None, residual=None):
        super().__init__(message)
        self.pair = pair
        self.residual = residual


class DegenerateWitnessError(QRGError):
    """The normalised witness has (numerically) zero overlap with every free state."""


class ConstructionError(QRGError):
    """An internal construction produced an invalid object. Always a bug."""


class NumericalError(QRGError):
    """A numerical routine failed to reach the requested accuracy.

    ``lower`` and ``upper`` carry the best certified bounds found, when known.
    """

    def __init__(self, message, lower=None, upper=None, iterations=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper
        self.iterations = iterations
