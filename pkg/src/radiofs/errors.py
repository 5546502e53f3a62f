"""Exception types shared across the toolkit."""


class RadiofsError(Exception):
    """Base class for every error raised by this package."""


class DatasetError(RadiofsError, ValueError):
    """Malformed or unusable input data."""


class EmptySelectionError(RadiofsError, ValueError):
    """A filtering step left no features."""


class ConvergenceError(RadiofsError, RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class SvmConvergenceError(ConvergenceError):
    def __init__(self, message, max_violation):
        super().__init__(f"{message} (max KKT violation {max_violation:.3g})")
        self.max_violation = max_violation


class EigenSolverError(ConvergenceError):
    pass


class ConfigError(RadiofsError, ValueError):
    """Invalid experiment configuration."""


class PipelineError(RadiofsError, RuntimeError):
    """Error raised from a pipeline stage, tagged with that stage's name."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
