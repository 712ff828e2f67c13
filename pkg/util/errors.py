from typing import Optional


class GeoGrowthError(Exception):
    """
    base class of every error the pipeline raises on purpose
    exit_code is what the command line front end returns for it
    """
    exit_code = 1


class ConfigError(GeoGrowthError):
    exit_code = 1


class DataError(GeoGrowthError):
    exit_code = 2


class InsufficientObservationsError(DataError):
    def __init__(self, message: str, nobs: int, needed: int):
        self.nobs = nobs
        self.needed = needed
        super().__init__(message)


class EventParseError(DataError):
    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None,
                 offset: Optional[int] = None):
        self.line = line
        self.source = source
        self.offset = offset
        location = ""
        if source is not None:
            location += f"{source}:"
        if line is not None:
            location += f"line {line}: "
        elif offset is not None:
            location += f"byte {offset}: "
        elif location:
            location += " "
        super().__init__(f"{location}{message}")


class EventValidationError(DataError):
    def __init__(self, index: int, field: str, reason: str):
        self.index = index
        self.field = field
        self.reason = reason
        super().__init__(f"record {index}: {field}: {reason}")


class NumericalError(GeoGrowthError):
    exit_code = 3


class SingularityError(NumericalError):
    def __init__(self, message: str, column: Optional[str] = None):
        self.column = column
        super().__init__(message)


class ConvergenceError(NumericalError):
    def __init__(self, message: str, worst: float):
        self.worst = worst
        super().__init__(message)


class InferenceError(NumericalError):
    pass
