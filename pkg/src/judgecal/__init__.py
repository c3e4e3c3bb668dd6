"""Bias-corrected accuracy estimates for LLM-as-a-judge evaluations."""

from judgecal.errors import (
    BudgetError,
    DegenerateProportionError,
    EmptyTestSetError,
    InputFormatError,
    InvariantViolation,
    JudgeCalError,
    NonIdentifiableError,
    OutOfRegimeError,
)
from judgecal.types import (
    AdjustedQuantities,
    CalibrationSummary,
    IntervalEstimate,
    OperatingPoint,
    TestSummary,
)
from judgecal.estimator import (
    adjust_quantities,
    adjusted_point,
    approx_adjusted_bias,
    confidence_interval,
    delta_variance,
    forward_judged_rate,
    interval_from_proportions,
    naive_bias,
    naive_estimate,
    naive_interval,
    normal_quantile,
    plan_calibration_size,
)
from judgecal.allocation import (
    AllocationPlan,
    PilotResult,
    adaptive_allocate,
    error_ratio,
    optimal_split,
)

__version__ = "0.1.0"

__all__ = [
    "AdjustedQuantities",
    "AllocationPlan",
    "BudgetError",
    "CalibrationSummary",
    "DegenerateProportionError",
    "EmptyTestSetError",
    "InputFormatError",
    "IntervalEstimate",
    "InvariantViolation",
    "JudgeCalError",
    "NonIdentifiableError",
    "OperatingPoint",
    "OutOfRegimeError",
    "PilotResult",
    "TestSummary",
    "adaptive_allocate",
    "adjust_quantities",
    "adjusted_point",
    "approx_adjusted_bias",
    "confidence_interval",
    "delta_variance",
    "error_ratio",
    "forward_judged_rate",
    "interval_from_proportions",
    "naive_bias",
    "naive_estimate",
    "naive_interval",
    "normal_quantile",
    "optimal_split",
    "plan_calibration_size",
]
