"""Exception types shared across the package."""


class QmetError(ValueError):
    """Base class for numerical precondition failures."""


class InvalidSpaceError(QmetError):
    pass


class DimensionMismatchError(QmetError):
    pass


class TruncationEdgeError(QmetError):
    """A state has weight on the top two Fock levels, where [X, P] = i fails."""


class DomainError(QmetError):
    pass


class WeakRegimeError(QmetError):
    pass


class DegenerateError(QmetError):
    pass


class CoverageError(QmetError):
    pass


class SamplingError(QmetError):
    pass


class InvariantError(QmetError):
    """Raised by validation code when a checked identity does not hold."""
