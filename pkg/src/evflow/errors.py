"""Exception types shared across the package."""


class EvflowError(Exception):
    """Base class for all package-specific errors."""


class EventParseError(EvflowError):
    """Raised when an event text file cannot be parsed; carries the line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class DivergenceError(EvflowError):
    """Raised when a solver produces non-finite values."""


class FloFormatError(EvflowError):
    """Raised on malformed Middlebury .flo files."""


class ConfigError(EvflowError):
    """Raised on malformed or unknown configuration keys/values."""
