"""Exception hierarchy for privsig."""

from typing import Optional


class PrivsigError(Exception):
    """Base class for all privsig errors."""


class ValidationFailure(PrivsigError, ValueError):
    """Input rejected by a solver or a model validator."""


class NotPositiveDefinite(ValidationFailure):
    """A matrix required to be positive definite is not."""

    def __init__(self, message: str, eigenvalue: Optional[float] = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class DimensionMismatch(ValidationFailure):
    """Encoder, decoder and source dimensions do not line up."""


class InvalidAlphas(ValidationFailure):
    """Encoder scalings do not match the number of conveyable directions."""


class AlphaOutOfRange(ValidationFailure):
    """Constrained bottleneck floor outside [0, tr(Sigma_X)]."""


class DegenerateCovariance(ValidationFailure):
    """A covariance needed for a log-determinant is inconsistent."""


class NonConvergence(PrivsigError, RuntimeError):
    """An iterative routine hit its iteration cap."""

    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class IndefiniteEncoderCost(PrivsigError):
    """The sender's pointwise cost is not strictly convex in the message."""

    def __init__(self, message: str, curvature: float):
        super().__init__(message)
        self.curvature = curvature
