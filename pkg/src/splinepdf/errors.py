"""Exception types.

Invalid arguments raise the builtin ``ValueError``.
"""


class NumericalFailure(RuntimeError):
    """A numerical routine did not converge or produced unusable output."""


class ConfigError(ValueError):
    """A study configuration is malformed or internally inconsistent."""


class UndefinedStatistic(ValueError):
    """A statistic is undefined for the given input (e.g. zero resultant length)."""
