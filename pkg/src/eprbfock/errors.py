"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class EmptySectorError(DomainError):
    """A particle-number sector with no basis states was requested."""


class PreconditionError(ValueError):
    """An input violates a stated precondition (hermiticity, unit norm, ...)."""


class EstimationError(ValueError):
    """A least-squares fit cannot be carried out on the supplied data."""


class DegenerateKinematicsError(ValueError):
    """Wavepacket kinematics leave the saddle point undefined."""


class AccuracyError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class ResourceError(RuntimeError):
    """A requested Hilbert space exceeds the configured size budget."""
