"""Exception types shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class InvariantError(DomainError):
    """An input object violates a structural invariant (e.g. Hermiticity)."""


class UnsupportedDimensionError(DomainError):
    pass


class NotApplicableError(DomainError):
    """The operation has no meaning for this input (e.g. Pockels cells at t=1)."""


class ResourceError(RuntimeError):
    """An exhaustive search would be too large to run."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without meeting its convergence test.

    The best iterate found so far is kept on ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SeesawError(RuntimeError):
    """Internal numerical fault of the seesaw iteration (non-monotone step)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
