"""Exception types shared across the package."""


class KnowdiffError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(KnowdiffError, ValueError):
    pass


class UnknownAgent(KnowdiffError, KeyError):
    pass


class UnknownLayer(KnowdiffError, IndexError):
    pass


class UnknownLabel(KnowdiffError, KeyError):
    pass


class CycleDetected(KnowdiffError, ValueError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(str(c) for c in self.cycle))


class DimensionMismatch(KnowdiffError, ValueError):
    pass


class EmptyPopulation(KnowdiffError, ValueError):
    pass


class ConfigError(KnowdiffError, ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
