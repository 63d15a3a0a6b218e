"""Exception hierarchy shared by all fxlab modules."""


class FxLabError(Exception):
    """Base class for every error raised by fxlab."""


class DataError(FxLabError):
    """Problem with input market data or stored results."""


class ConfigError(FxLabError, ValueError):
    """Invalid parameters or run configuration."""


class EmptyData(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class InvariantViolation(DataError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NonMonotonicTimestamps(DataError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnsupportedGranularity(ConfigError):
    pass


class InsufficientData(DataError):
    pass


class EmptySeries(DataError):
    pass


class InvalidSpec(ConfigError):
    pass


class MissingHeuristic(DataError):
    pass


class InsufficientRecords(DataError):
    pass


class MalformedResults(DataError):
    pass
