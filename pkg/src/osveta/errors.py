"""Exception types shared across the toolkit."""


class OsvetaError(Exception):
    """Base class for all toolkit errors."""


class MeshFormatError(OsvetaError):
    """Raised when a mesh file cannot be parsed.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeometryError(OsvetaError):
    """Raised when a geometric computation is undefined for the input.

    Examples: an all-degenerate 1-ring, a zero-resultant normal average,
    a rank-deficient quadric fit.
    """


class ModelFormatError(OsvetaError):
    """Raised when a serialized network model cannot be read."""


class TrainingError(OsvetaError):
    """Raised when training diverges (non-finite loss)."""

    def __init__(self, message: str, epoch: int | None = None):
        self.epoch = epoch
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)
