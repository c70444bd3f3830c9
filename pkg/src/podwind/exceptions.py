"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, DataQualityError -> 3,
NumericalError -> 4.  Everything else is a bug and propagates.
"""


class PodwindError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PodwindError):
    """Invalid configuration, geometry, arguments, or file layout."""


class DataQualityError(PodwindError):
    """Input data violates a precondition (NaNs, degenerate channels, ...)."""


class NumericalError(PodwindError):
    """A numerical routine failed to converge or produced invalid output."""
