"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, and the HTTP service maps
them onto status codes, so everything raised at a public surface should
derive from RepadError.
"""


class RepadError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RepadError, ValueError):
    """Invalid configuration (bad window size, lookback, flag combination...)."""


class DataFormatError(RepadError, ValueError):
    """Malformed input data: bad CSV row, non-finite value, invalid label line."""


class StreamOrderError(RepadError, ValueError):
    """A point arrived out of order, or with a gap, on a detector stream."""


class ThresholdUndefinedError(RepadError, RuntimeError):
    """threshold() was queried before three AARE values were recorded."""


class TrainingDivergedError(RepadError, RuntimeError):
    """Training produced a non-finite loss (exploding gradients)."""
