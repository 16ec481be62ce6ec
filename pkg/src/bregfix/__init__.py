"""Bregman-distance geometry, mapping-class verifiers and fixed-point iterations."""

from .core import (Box, BregmanFunction, bregman_distance, bregman_project, conjugate_numeric,
                   quartic, section6_quadratic, squared_norm, v_function)
from .errors import (BregfixError, ConfigError, DimensionError, DomainError, NumericError,
                     ScheduleError, UnsupportedError)
from .iterations import IterationConfig, IterationTrace, Schedule, run
from .mappings import Mapping, PropertyReport

__version__ = "0.1.0"

__all__ = [
    "Box", "BregmanFunction", "bregman_distance", "bregman_project", "conjugate_numeric",
    "quartic", "section6_quadratic", "squared_norm", "v_function",
    "BregfixError", "ConfigError", "DimensionError", "DomainError", "NumericError",
    "ScheduleError", "UnsupportedError",
    "IterationConfig", "IterationTrace", "Schedule", "run", "Mapping", "PropertyReport",
]
