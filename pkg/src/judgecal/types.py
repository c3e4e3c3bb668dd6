"""Value types shared by the estimation, allocation and simulation code."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from judgecal.errors import EmptyTestSetError, JudgeCalError, NonIdentifiableError


def _check_count(name: str, value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise JudgeCalError(f"{name} must be an int, got {type(value).__name__}")
    if value < 0:
        raise JudgeCalError(f"{name} must be >= 0, got {value}")


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise JudgeCalError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class TestSummary:
    """Counts from the test set, whose true labels are unknown.

    Attributes:
        n: number of test instances.
        judged_correct: number of instances the judge labelled 1.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    n: int
    judged_correct: int

    def __post_init__(self):
        _check_count("n", self.n)
        _check_count("judged_correct", self.judged_correct)
        if self.judged_correct > self.n:
            raise JudgeCalError(
                f"judged_correct ({self.judged_correct}) exceeds n ({self.n})"
            )

    @property
    def p_hat(self) -> float:
        if self.n == 0:
            raise EmptyTestSetError("test set is empty (n = 0)")
        return self.judged_correct / self.n


@dataclass(frozen=True)
class CalibrationSummary:
    """Counts from the human-labelled calibration set.

    ``agree0`` counts true-0 items the judge labelled 0 and ``agree1``
    counts true-1 items the judge labelled 1.
    """

    m0: int
    m1: int
    agree0: int
    agree1: int

    def __post_init__(self):
        for name in ("m0", "m1", "agree0", "agree1"):
            _check_count(name, getattr(self, name))
        if self.agree0 > self.m0:
            raise JudgeCalError(f"agree0 ({self.agree0}) exceeds m0 ({self.m0})")
        if self.agree1 > self.m1:
            raise JudgeCalError(f"agree1 ({self.agree1}) exceeds m1 ({self.m1})")

    @property
    def q0_hat(self) -> float:
        if self.m0 == 0:
            raise JudgeCalError("no calibration items with true label 0 (m0 = 0)")
        return self.agree0 / self.m0

    @property
    def q1_hat(self) -> float:
        if self.m1 == 0:
            raise JudgeCalError("no calibration items with true label 1 (m1 = 0)")
        return self.agree1 / self.m1


@dataclass(frozen=True)
class OperatingPoint:
    """Judge specificity ``q0`` and sensitivity ``q1``."""

    q0: float
    q1: float

    def __post_init__(self):
        _check_unit("q0", self.q0)
        _check_unit("q1", self.q1)

    @property
    def identifiable(self) -> bool:
        return self.q0 + self.q1 > 1.0

    def require_identifiable(self) -> None:
        if not self.identifiable:
            raise NonIdentifiableError(self.q0, self.q1)


@dataclass(frozen=True)
class AdjustedQuantities:
    """Smoothed sample sizes and proportions used by the interval."""

    n_t: float
    m0_t: float
    m1_t: float
    p_t: float
    q0_t: float
    q1_t: float
    theta_t: float
    dtheta_t: float


@dataclass(frozen=True)
class IntervalEstimate:
    """A clipped ``(1 - alpha)`` interval around the bias-adjusted estimate.

    ``theta_hat`` is None when a calibration side is empty, since the raw
    accuracy on that side is undefined even though the smoothed interval is.
    """

    theta_hat: Optional[float]
    lower: float
    upper: float
    alpha: float
    z: float

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def covers(self, theta: float) -> bool:
        return self.lower <= theta <= self.upper
