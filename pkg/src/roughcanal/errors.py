"""Exception hierarchy shared by all modules."""


class RoughCanalError(Exception):
    """Base class for domain errors raised by this package."""


class InvalidGeometryError(RoughCanalError, ValueError):
    pass


class DegenerateElementError(RoughCanalError, ValueError):
    pass


class InconsistentScalingError(RoughCanalError, ValueError):
    """Plate sizes do not satisfy ``A_i = eps * a_i * N_i``."""


class EmptySystemError(RoughCanalError, ValueError):
    pass


class InsufficientRankError(RoughCanalError, ValueError):
    pass


class ConvergenceError(RoughCanalError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SolverError(RoughCanalError, RuntimeError):
    pass


class MeshMismatchError(RoughCanalError, ValueError):
    pass


class BudgetError(RoughCanalError, RuntimeError):
    def __init__(self, message, eps=None, nodes=None):
        super().__init__(message)
        self.eps = eps
        self.nodes = nodes


class ThresholdViolationError(RoughCanalError, ValueError):
    """The requested interval (0, d) reaches the continuous spectrum."""


class NotFoundError(RoughCanalError, RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(RoughCanalError, ValueError):
    pass


class RangeGuardError(RoughCanalError, OverflowError):
    """A scale parameter lies outside the range where floating point stays meaningful."""
