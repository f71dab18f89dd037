class PrsboxError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(PrsboxError, ValueError):
    """An operation was called with parameters outside its domain."""


class PresetError(ParameterError):
    """Unknown figure preset name."""


class EmitError(PrsboxError, OSError):
    """Results could not be written."""


class ConsistencyError(PrsboxError):
    """Two independent computations of the same quantity disagree."""
