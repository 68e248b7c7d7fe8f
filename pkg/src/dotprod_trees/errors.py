"""Exception hierarchy shared by all modules."""


class DotprodError(Exception):
    """Base class for every error raised by this package."""


class TreeError(DotprodError, ValueError):
    pass


class CycleDetected(TreeError):
    pass


class Disconnected(TreeError):
    pass


class SelfLoop(TreeError):
    pass


class DuplicateEdge(TreeError):
    pass


class InvalidVertex(TreeError):
    pass


class NotALeaf(TreeError):
    pass


class IsLeaf(TreeError):
    pass


class IsolatedVertex(TreeError):
    pass


class TooLarge(TreeError):
    pass


class MeasureError(DotprodError, ValueError):
    pass


class OverlappingBranches(MeasureError):
    pass


class TooManyPoints(MeasureError):
    pass


class EmptyRadiusList(MeasureError):
    pass


class CountError(DotprodError, ValueError):
    pass


class UnknownKernel(CountError):
    pass


class TupleSpaceTooLarge(CountError):
    pass


class OutputTooLarge(CountError):
    pass


class ExperimentError(DotprodError, ValueError):
    pass


class DegenerateInterval(ExperimentError):
    pass


class AllZeroValues(ExperimentError):
    pass


class NotACover(ExperimentError):
    pass


class NoEmbeddingsFound(ExperimentError):
    pass


class BinTooSmall(ExperimentError):
    pass


class LadderOutOfRange(ExperimentError):
    pass


class ResolutionFloor(ExperimentError):
    pass


class SpectralError(DotprodError, ValueError):
    pass


class DimensionTooHigh(SpectralError):
    pass


class GridTooCoarse(SpectralError):
    pass


class ConfigInvalid(DotprodError, ValueError):
    """Bad experiment configuration; ``field`` is a dotted path or ``file:line``."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
