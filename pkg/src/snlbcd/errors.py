"""Exception types shared across the package."""


class SnlError(Exception):
    """Base class for all package errors."""


class MalformedInstanceError(SnlError):
    """Instance data violates a structural invariant (indices, duplicates, distances)."""


class FileFormatError(SnlError):
    """An instance/solution/grid file is missing, unparseable, or has wrong fields."""


class DisconnectedInstanceError(SnlError):
    """Some sensor has no path to any anchor, so the solve is rejected."""


class ConfigError(SnlError):
    """A solver, schedule, or generation configuration value is invalid."""


class DegenerateScheduleError(SnlError):
    """The dynamic schedule is undefined because the initial misfit is zero."""


class DivergenceError(SnlError):
    """Non-finite values appeared during iteration."""
