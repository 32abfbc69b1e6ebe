"""Exceptions raised by the engine."""


class HeatlineError(Exception):
    """Base class for engine errors."""


class OrderingError(HeatlineError, ValueError):
    """Events were not ordered by wall time where ordering is required."""


class BeforeCourseStartError(HeatlineError, ValueError):
    """An event's wall time falls before the course start day."""


class UnknownCourseError(HeatlineError, KeyError):
    """Referenced course does not exist in the data directory."""


class UnknownVideoError(HeatlineError, KeyError):
    """Referenced video is not in the course catalog."""
