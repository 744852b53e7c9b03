"""Exception types raised across the package."""


class GeomintError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(GeomintError, ValueError):
    """Operands belong to different algebras or have incompatible shapes."""


class UnsupportedRealizationError(GeomintError, ValueError):
    """A matrix realization (hat/vee) was required but is not available."""


class GroupMembershipError(GeomintError, ValueError):
    """A matrix fails the membership test of its group (orthogonality, det)."""


class RetractionDomainError(GeomintError, ValueError):
    """Argument outside the invertibility domain of a retraction (log branch)."""


class ParameterError(GeomintError, ValueError):
    """A scalar parameter is outside its admissible range."""


class ConvergenceError(GeomintError, RuntimeError):
    """Newton iteration failed to reach the residual tolerance."""

    def __init__(self, message: str, residual: float | None = None,
                 iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class LinearSolveError(GeomintError, RuntimeError):
    """A linear solve met a singular or numerically unusable matrix."""
