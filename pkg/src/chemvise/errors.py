"""Exception hierarchy and process exit codes.

Exit code convention: 2 for configuration and validation problems, 3 for
data and parse problems, 4 for numeric and training failures.
"""


class ChemviseError(Exception):
    exit_code = 1


class ConfigError(ChemviseError):
    """Invalid configuration, arguments, or validation failure."""

    exit_code = 2


class ScheduleError(ConfigError):
    """Exposure schedule with non-positive duration or onset outside the trace."""


class UnknownAnalyteError(ConfigError):
    """Mix references an analyte the model or target space does not know."""


class CapacityError(ConfigError):
    """More analytes than the target-space geometry can hold."""


class DimensionError(ConfigError):
    """Shape or length mismatch between arrays that must agree."""


class WindowRangeError(ConfigError):
    """Requested window does not lie within the trace."""


class SplitHygieneError(ConfigError):
    """Holdout data read before hyperparameters were frozen, or holdout
    files changed since the split tags were recorded."""


class DataError(ChemviseError):
    exit_code = 3


class ParseError(DataError):
    """Malformed CSV or JSON input; message names the offending line."""


class DegenerateDataError(DataError):
    """Data unusable for the requested fit (single class, zero variance)."""


class NumericError(ChemviseError):
    exit_code = 4


class TrainingDivergedError(NumericError):
    """Loss became NaN/Inf during training; message names the epoch."""


class ConstantChannelWarning(UserWarning):
    """A channel with ~zero variance was z-scored to all zeros."""


class SingletonBatchWarning(UserWarning):
    """augment_batch received a single-sample batch and passed it through."""
