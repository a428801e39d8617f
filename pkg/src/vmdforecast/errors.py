"""Exception hierarchy shared by the library and the CLI."""


class VmdForecastError(Exception):
    """Base class for all library errors."""


class DataError(VmdForecastError, ValueError):
    """Input data is malformed, unsorted, or too short."""


class ConfigError(VmdForecastError, ValueError):
    """An experiment configuration is invalid."""


class NumericalError(VmdForecastError, ArithmeticError):
    """A numerical procedure produced non-finite values or cannot proceed."""


class StageError(VmdForecastError):
    """Wraps an error raised inside a pipeline stage, tagging the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
