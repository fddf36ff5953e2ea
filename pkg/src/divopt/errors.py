"""Exception hierarchy shared by every divopt module."""


class DivoptError(Exception):
    pass


class ConfigurationError(DivoptError, ValueError):
    """Invalid bounds, dimensions, run configuration or missing reference data."""


class UnsupportedDimensionError(ConfigurationError):
    pass


class IndicatorDomainError(DivoptError, ValueError):
    """Inputs outside the mathematical domain of an indicator."""


class InitializationError(DivoptError, RuntimeError):
    def __init__(self, message: str, acceptance_rate: float | None = None):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate


class CapacityError(DivoptError, ValueError):
    pass


class ParseError(DivoptError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedFormatError(ParseError):
    pass
