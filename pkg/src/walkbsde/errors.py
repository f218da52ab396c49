"""Exception types raised across the package."""


class WalkBSDEError(Exception):
    """Base class for all package errors."""


class InvalidArgument(WalkBSDEError, ValueError):
    pass


class SchemeUnstableError(WalkBSDEError):
    """The step size is too large for the implicit layer equation to contract."""

    def __init__(self, message, min_n):
        super().__init__(message)
        self.min_n = min_n


class EvaluationError(WalkBSDEError, ArithmeticError):
    pass


class GridPointError(WalkBSDEError, ValueError):
    """Z-law requested at a time lying on the grid."""


class HorizonGradientError(WalkBSDEError, ValueError):
    pass


class OracleAccuracyError(WalkBSDEError):
    def __init__(self, message, ratio=None, residual=None):
        super().__init__(message)
        self.ratio = ratio
        self.residual = residual


class DegenerateSmoothingError(WalkBSDEError, ValueError):
    pass


class InsufficientDataError(WalkBSDEError, ValueError):
    pass


class MemoryGuardError(WalkBSDEError, MemoryError):
    pass


class NoDataError(WalkBSDEError, ValueError):
    pass
