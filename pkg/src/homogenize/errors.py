"""Exception types shared across the package."""


class CapacityError(RuntimeError):
    """A requested computation exceeds the configured resource limits."""


class CapabilityError(ValueError):
    """The operation is outside the supported parameter range (by design)."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge.

    Carries the final residual so callers can report how close the solve got.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
