# backend/app/core/exceptions.py
from typing import Optional, Sequence


class UnisolverError(Exception):
    """Base class for every error raised by the lab."""
    def __init__(self, message: str = "Unisolver error"):
        self.message = message
        super().__init__(self.message)


class DimensionError(UnisolverError):
    """Custom exception for incompatible shapes, axes or grid sizes."""
    def __init__(self, message: str = "Dimension mismatch", shapes: Sequence[tuple] = ()):
        self.shapes = tuple(tuple(s) for s in shapes)
        if self.shapes:
            message = f"{message} (shapes: {', '.join(str(s) for s in self.shapes)})"
        super().__init__(message)


class ConfigError(UnisolverError):
    """Custom exception for invalid or degenerate configuration."""
    def __init__(self, message: str = "Invalid configuration"):
        super().__init__(message)


class ConfigMismatchError(ConfigError):
    """Raised when a declared config disagrees with a checkpoint snapshot."""
    def __init__(self, fields: Sequence[str], message: Optional[str] = None):
        self.fields = list(fields)
        super().__init__(message or f"Config does not match checkpoint snapshot on: {', '.join(self.fields)}")


class DivergedError(UnisolverError):
    """Custom exception for numerical blow-up inside a solver."""
    def __init__(self, message: str = "Solver diverged", step: Optional[int] = None, time: Optional[float] = None):
        self.step = step
        self.time = time
        super().__init__(message)


class GenerationAbortedError(UnisolverError):
    """Raised when too many samples of a generation run diverge."""
    def __init__(self, message: str = "Dataset generation aborted"):
        super().__init__(message)


class TrainingDivergedError(UnisolverError):
    """Raised on a non-finite training loss; the last good checkpoint is kept."""
    def __init__(self, message: str = "Training diverged", checkpoint_path: Optional[str] = None):
        self.checkpoint_path = checkpoint_path
        super().__init__(message)


class FormatError(UnisolverError):
    """Custom exception for malformed binary containers."""
    def __init__(self, message: str = "Malformed file"):
        super().__init__(message)


class FormatVersionError(FormatError):
    def __init__(self, version: int, kind: str = "file"):
        self.version = version
        super().__init__(f"{kind} format version {version} unsupported")


class NotFoundException(UnisolverError):
    """Custom exception for when a resource is not found."""
    def __init__(self, message: str = "Resource not found"):
        super().__init__(message)


class MetricError(UnisolverError):
    """Custom exception for metrics that are undefined on their inputs."""
    def __init__(self, message: str = "Metric undefined"):
        super().__init__(message)


class OutOfDomainError(UnisolverError):
    """Raised when a point lies outside the domain an evaluator covers."""
    def __init__(self, message: str = "Point outside the solution domain"):
        super().__init__(message)
