"""Exception hierarchy shared across the package."""


class CamForestError(Exception):
    """Base class for all package errors."""


class ConfigError(CamForestError):
    """Bad, unknown, or missing configuration values."""


class DataError(CamForestError):
    """Malformed dataset or model documents."""


class ModelFormatError(DataError):
    """Serialized forest/plan document violates its schema."""


class CalibrationError(CamForestError):
    """Cell-model calibration cannot place match edges (bad operating point)."""


class InvariantError(CamForestError):
    """Internal consistency check failed (corrupt mapping or bookkeeping)."""
