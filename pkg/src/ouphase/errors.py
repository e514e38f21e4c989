"""Error classes shared across the package.

The CLI maps these to exit codes: parameter/configuration problems exit
with 1, statistics problems (run too short, too few trials) with 2.
"""


class ParameterError(ValueError):
    """An argument or field violates its documented contract."""


class ConfigurationError(ParameterError):
    """A run configuration is unusable (instability, decimation bias, no bracket)."""


class StatisticsError(RuntimeError):
    """Requested statistics cannot be computed from the data provided."""
