"""Exception types raised across the package."""


class ParameterDomainError(ValueError):
    """A distribution or model parameter lies outside its valid domain."""


class DimensionError(ValueError):
    """Array shapes are inconsistent with each other."""


class ConfigError(ValueError):
    """An invalid configuration (grid, plan, chain settings)."""


class PreconditionError(ValueError):
    """An operation was called with inputs violating its precondition."""


class SingularDesignError(ValueError):
    """The design matrix is rank deficient."""


class ConditioningError(RuntimeError):
    """Cholesky factorization failed even after the jitter schedule.

    Attributes
    ----------
    jitters : list of float
        Diagonal increments that were attempted, in order.
    iteration : int or None
        Gibbs iteration at which the failure happened, when known.
    """

    def __init__(self, message, jitters=(), iteration=None):
        super().__init__(message)
        self.jitters = list(jitters)
        self.iteration = iteration


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, objective=None, iterations=None):
        super().__init__(message)
        self.objective = objective
        self.iterations = iterations
