"""Exception types raised by the pipeline."""


class MonochainError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(MonochainError, ValueError):
    pass


class IllConditionedLatticeError(MonochainError):
    """Lattice coordinates could not be recovered as exact rationals."""


class NumericalBlowupError(MonochainError, FloatingPointError):
    pass


class IncompatibleGridError(MonochainError, ValueError):
    pass


class ScanQualityError(MonochainError):
    """Too many y-points failed to produce a usable zero-mode pair."""
