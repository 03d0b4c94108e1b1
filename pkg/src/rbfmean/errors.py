"""Exception types shared across the package.

Each class marks a distinct failure family so callers (and the CLI exit-code
mapping) can react without parsing messages.
"""


class RbfMeanError(Exception):
    """Base class for all package errors."""


class BoundsError(RbfMeanError, IndexError):
    """An index (timestep, onset, window position) is out of range."""


class ShapeError(RbfMeanError, ValueError):
    """Array dimensions disagree with what an operation requires."""


class DataError(RbfMeanError, ValueError):
    """Input values are unusable (NaN/Inf, wrong class mix, contamination)."""


class InsufficientDataError(DataError):
    """Too few samples to fit or evaluate."""


class ContaminationError(DataError):
    """Training input contains labeled-anomalous episodes."""


class ConfigError(RbfMeanError, ValueError):
    """Invalid or inconsistent configuration values."""


class MetricUndefinedError(RbfMeanError, ValueError):
    """A metric has no defined value for this input (e.g. single-class AUROC)."""


class ModelLoadError(RbfMeanError, ValueError):
    """A persisted model payload is malformed."""


class VersionError(ModelLoadError):
    """A persisted model carries an unsupported version tag."""
