"""Exception types raised across the package."""


class PursuitError(Exception):
    """Base class for all package errors."""


class DomainError(PursuitError, ValueError):
    """A parameter lies outside its admissible range."""


class SingularStateError(PursuitError, ValueError):
    """The state sits too close to r = 0, where the model breaks down."""

    def __init__(self, r, r_min):
        super().__init__(f"|r| = {abs(r):.3e} is below r_min = {r_min:.1e}")
        self.r = r
        self.r_min = r_min


class ContinuationError(PursuitError, RuntimeError):
    """Continuation failed. ``branch`` holds whatever was computed before the failure."""

    def __init__(self, message, branch=None):
        super().__init__(message)
        self.branch = branch


class NoConvergenceError(ContinuationError):
    pass


class SingularStartError(ContinuationError):
    pass


class BracketLostError(ContinuationError):
    pass


class IntegrationError(PursuitError, RuntimeError):
    """Integration failed. ``trajectory`` holds the partial result."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StepUnderflowError(IntegrationError):
    pass


class ConfigError(PursuitError, ValueError):
    pass
