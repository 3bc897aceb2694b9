"""Exception types raised across the package."""


class DegenerateConfigurationError(ValueError):
    """Coincident particles, zero transfer vectors and similar singular inputs."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class UnsupportedModeError(ValueError):
    pass


class UnsupportedFeatureError(ValueError):
    pass


class StiffnessError(RuntimeError):
    def __init__(self, message, t=None, step=None):
        super().__init__(message)
        self.t = t
        self.step = step


class CollisionError(RuntimeError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class AlignmentError(ValueError):
    pass


class CapacityError(RuntimeError):
    pass


class ExcludedTransferError(ValueError):
    """Raised for the q = 0 momentum transfer, which is dropped from all sums."""


class SolverError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NormalizationError(ValueError):
    pass


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
