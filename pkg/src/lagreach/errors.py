"""Exception hierarchy shared by all modules."""


class ReachError(Exception):
    """Base class for every error raised by lagreach."""


class DimensionMismatch(ReachError, ValueError):
    pass


class NonInvertibleMap(ReachError, ValueError):
    pass


class UnboundedPolytope(ReachError, ValueError):
    pass


class UnboundedSubtrahend(UnboundedPolytope):
    pass


class DimensionCapExceeded(ReachError, ValueError):
    pass


class DegenerateDirections(ReachError, ValueError):
    pass


class EmptyList(ReachError, ValueError):
    pass


class EmptyOperand(ReachError, ValueError):
    pass


class HorizonMismatch(ReachError, ValueError):
    pass


class IndexOutOfRange(ReachError, IndexError):
    pass


class InvalidProbability(ReachError, ValueError):
    pass


class InvalidTemplate(ReachError, ValueError):
    pass


class NoConvergence(ReachError, RuntimeError):
    pass


class GridCapExceeded(ReachError, ValueError):
    pass


class ConfigInvalid(ReachError, ValueError):
    """Scenario configuration error; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
