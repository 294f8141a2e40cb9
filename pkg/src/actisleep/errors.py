"""Exception classes shared across the package.

The CLI maps these onto exit codes: format/IO problems exit 2,
validation problems exit 1, bad flags exit 3.
"""


class ActisleepError(Exception):
    """Base class for all package errors."""


class FormatError(ActisleepError):
    """A file does not conform to its declared format."""


class EmptyInputError(FormatError):
    """A file contains no usable data rows."""


class InputError(ActisleepError):
    """Arguments violate an operation's preconditions."""


class ConfigError(ActisleepError):
    """Unsupported configuration value (e.g. epoch length)."""


class DegenerateWeightError(ActisleepError):
    """A weighted fit received all-zero weights."""


class UndefinedStatisticError(ActisleepError):
    """A statistic is undefined for the given data (e.g. zero variance)."""
