class SqueezeLabError(Exception):
    """Base class for library errors."""


class ValidationError(SqueezeLabError, ValueError):
    """Input violates a physical or structural invariant."""


class ConvergenceError(SqueezeLabError, RuntimeError):
    """A numerical procedure did not reach its accuracy target."""
