"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap or stalled before reaching
    its tolerance.

    Carries the best iterate seen so far in ``best`` (solver-specific payload)
    together with the residual it achieved.
    """

    def __init__(self, message, best=None, residual=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class UnboundedObjectiveError(RuntimeError):
    """The requested supremum or infimum is unbounded."""


class UnsupportedOperationError(RuntimeError):
    """The inputs fall outside the finitely generated / enumerable cases this
    package supports."""
