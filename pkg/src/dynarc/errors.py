"""Exception types raised across the package."""


class DynarcError(ValueError):
    """Base class for all package errors."""


class ZeroVector(DynarcError):
    pass


class DimensionMismatch(DynarcError):
    pass


class TargetOutOfRange(DynarcError):
    pass


class InvalidBounds(DynarcError):
    pass


class DegenerateRange(DynarcError):
    pass


class EmptyCounts(DynarcError):
    pass


class EmptyGallery(DynarcError):
    pass


class EmptyNeighbors(DynarcError):
    pass


class UnknownQueryId(DynarcError):
    pass


class DuplicatePrediction(DynarcError):
    pass


class ShapeMismatch(DynarcError):
    pass


class RowCountMismatch(ShapeMismatch):
    pass


class NonNormalizedInput(DynarcError):
    pass


class MissingHeadScores(DynarcError):
    pass


class InvalidParams(DynarcError):
    pass


class InvalidK(DynarcError):
    pass


class DivergedLoss(DynarcError):
    pass


class FormatError(DynarcError):
    """Malformed binary or CSV input. ``line`` is set for CSV errors."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(DynarcError):
    pass
