"""Exception types raised across the package."""


class NonConvergenceError(RuntimeError):
    """A quadrature did not reach its tolerance within the refinement cap."""

    def __init__(self, message, *, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class MemoryBudgetError(MemoryError):
    """Requested sample counts would exceed the configured memory budget."""


class SymmetryError(ValueError):
    """Slit amplitudes fall outside the exchange-symmetric subspace."""


class ExposureBudgetError(RuntimeError):
    """A Monte Carlo trial hit its bunch budget before completing."""
