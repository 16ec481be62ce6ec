"""Exception hierarchy shared by every module."""


class BregfixError(Exception):
    """Base class for all errors raised by bregfix."""


class DimensionError(BregfixError, ValueError):
    pass


class DomainError(BregfixError, ValueError):
    """A point lies outside the box it is required to live in."""


class ScheduleError(BregfixError, ValueError):
    """A schedule produced a value outside [0, 1)."""


class ConfigError(BregfixError, ValueError):
    pass


class NumericError(BregfixError, ArithmeticError):
    """A computation produced a non-finite value or failed to converge."""


class UnsupportedError(BregfixError, NotImplementedError):
    pass
