"""Exception taxonomy shared across the package.

Shape and range violations raise the builtin ValueError / IndexError;
these classes cover the cases the CLI maps to distinct exit codes.
"""


class ConfigError(ValueError):
    """Invalid run configuration (bad ranks, shape products, unknown kind)."""


class DataError(ValueError):
    """Dataset file missing, unparseable, or violating the piano-roll contract."""


class TrainingError(RuntimeError):
    """Numerical failure during optimization (non-finite loss or gradients)."""
