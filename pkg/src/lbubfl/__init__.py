"""Facility location with uniform lower and upper bounds on facility loads."""

from .core import (InfeasibleError, Instance, InvariantViolation, LbubflError, MetricError,
                   ParameterError, PipelineAbort, Solution, check_bounds, cost,
                   load_instance, save_instance, validate_metric)
from .generate import random_instance
from .oracle import exact_cfl, exact_lbfl, exact_lbubfl
from .pipeline import PipelineResult, solve
from .tricriteria import build_tricriteria

__all__ = [
    "InfeasibleError", "Instance", "InvariantViolation", "LbubflError", "MetricError",
    "ParameterError", "PipelineAbort", "PipelineResult", "Solution", "build_tricriteria",
    "check_bounds", "cost", "exact_cfl", "exact_lbfl", "exact_lbubfl", "load_instance",
    "random_instance", "save_instance", "solve", "validate_metric",
]
__version__ = "0.1.0"
