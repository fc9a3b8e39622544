"""Exception types shared across the package."""


class PredintError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PredintError):
    """A parameter, option, or method combination is invalid."""


class DataError(PredintError):
    """Input data is missing, malformed, or out of contract."""
