"""feaslab: feasibility determination for simulated systems under
subjective probability constraints."""

from .odds import (
    BoundaryPair,
    Classification,
    ErrorSplitScheme,
    absorption_probability,
    boundary_thresholds,
    classify,
    continuation_halfwidth,
    error_split,
    expected_stopping_time,
    per_constraint_error,
    tolerance_convert,
)
from .types import Decision, PassPlan, ProblemSpec, SamplingMode

__version__ = "0.1.0"

__all__ = [
    "BoundaryPair",
    "Classification",
    "Decision",
    "ErrorSplitScheme",
    "PassPlan",
    "ProblemSpec",
    "SamplingMode",
    "absorption_probability",
    "boundary_thresholds",
    "classify",
    "continuation_halfwidth",
    "error_split",
    "expected_stopping_time",
    "per_constraint_error",
    "tolerance_convert",
]
