"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all proxycloud errors."""


class CloudParseError(EngineError):
    """Malformed point-cloud input. Carries the 1-based offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyCloudError(EngineError):
    """Input declared or produced zero points."""


class EmptyLatticeError(EngineError):
    """Every input point fell outside the lattice."""


class DegeneratePointError(EngineError):
    """A point coincides with the proxy/sphere center; direction undefined."""


class UndefinedTangentError(EngineError):
    """Tangent requested with a zero sinking normal."""


class InsufficientNeighborsError(EngineError):
    """Fewer than two neighbors available for a local scatter estimate."""


class NoContactError(EngineError):
    """Trace comparison requested on a trace with no penetration episodes."""


class ConfigError(EngineError):
    """Invalid or unknown configuration content."""
