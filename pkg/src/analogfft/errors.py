"""Exception types. Each carries the CLI exit code it maps to."""


class AnalogFFTError(Exception):
    exit_code = 1


class InvalidSizeError(AnalogFFTError, ValueError):
    """Empty, zero-sized or mismatched dimensions."""

    exit_code = 2


class UnfactorableError(AnalogFFTError, ValueError):
    """A transform size cannot be split into leaves that fit the arrays."""

    exit_code = 3


class ConfigError(AnalogFFTError, ValueError):
    exit_code = 2


class MissingArrayError(ConfigError, KeyError):
    """A plan leaf has no programmed array in the bank."""


class FileFormatError(AnalogFFTError, IOError):
    exit_code = 4
