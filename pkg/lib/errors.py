"""
Exception hierarchy shared by the library and the command-line front-end.

Each class carries the process exit code the CLI returns when it escapes a command.
"""


class HonestTailError(Exception):
    """
    Base class for every error raised by the library.
    """
    exit_code: int = 1


class InputError(HonestTailError):
    """
    Unreadable input, missing column or a non-numeric cell.
    """
    exit_code = 3


class EmptySampleError(InputError):
    """
    Fewer than two usable observations.
    """


class ConfigurationError(HonestTailError):
    """
    Invalid grids, bounds or run parameters.
    """
    exit_code = 4


class MissingEntryError(ConfigurationError):
    """
    A critical value is not available in the loaded table.
    """


class DomainError(HonestTailError, ValueError):
    """
    A numerical precondition does not hold (log of a nonpositive value, rho <= 0, ...).
    """
    exit_code = 5


class BoundsError(DomainError, IndexError):
    """
    An order-statistic index or threshold count is out of range.
    """


class DegenerateEstimateError(DomainError):
    """
    The statistic is undefined because an estimate or weight vector vanishes.
    """


class ExtrapolationError(DomainError):
    """
    The quantile target is not beyond the threshold (n * p >= k).
    """


class ResolutionError(DomainError):
    """
    The requested point lies below the resolution of the simulated path.
    """
