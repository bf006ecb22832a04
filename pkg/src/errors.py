"""Errors Module - Exception types raised by the capacity toolbox"""


class CapnetError(Exception):
    """Base class for toolbox failures; exit_code is what the CLI returns"""

    exit_code = 4


class ConfigError(CapnetError):
    """Malformed network file, schema error or topology validation failure"""

    exit_code = 2

    def __init__(self, message: str, details=None):
        super().__init__(message)
        self.details = list(details or [])


class CapExceededError(CapnetError):
    """Enumeration or tensor size beyond the configured caps"""

    exit_code = 3

    def __init__(self, message: str, estimate: int = 0):
        super().__init__(message)
        self.estimate = estimate


class DimensionMismatchError(CapnetError):
    pass


class UnknownMessageError(CapnetError):
    pass


class BadParamsError(CapnetError):
    pass


class SchemeMismatchError(CapnetError):
    pass


class EmptyArgmaxError(CapnetError):
    pass


class SingularCovarianceError(CapnetError):
    pass


class NegativeInputError(CapnetError, ValueError):
    pass
