"""Exception hierarchy shared by all hoqmc modules.

The CLI maps :class:`ConfigurationError` to exit code 2 and
:class:`CapacityError` to exit code 3.
"""


class HoqmcError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HoqmcError, ValueError):
    """Inconsistent shapes, bases or parameters."""


class CapacityError(HoqmcError):
    """A request exceeds a precision, index or enumeration guard."""


class DigitRangeError(HoqmcError, ValueError):
    """An index or digit count lies outside its admissible range."""


class DirectionNumberError(HoqmcError, ValueError):
    """Malformed or inadmissible direction-number data.

    ``line`` is the 1-based line number in the source file, if known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
