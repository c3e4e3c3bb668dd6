"""Splitting a calibration labelling budget between the two true-label classes.

Interval length is minimised, approximately, when the true-0 and true-1
sample sizes stand in the ratio ``(1/p - 1) * sqrt(kappa)``, where ``kappa``
is the judge's error ratio ``(1 - q0) / (1 - q1)``. The adaptive procedure
estimates ``kappa`` from a small pilot sample of each class before
committing the remaining budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from judgecal.errors import BudgetError, DegenerateProportionError, JudgeCalError


@dataclass(frozen=True)
class PilotResult:
    m_pilot: int
    agree0_pilot: int
    agree1_pilot: int
    q0_tilde: float
    q1_tilde: float
    kappa_hat: float

    @classmethod
    def from_counts(cls, m_pilot: int, agree0_pilot: int, agree1_pilot: int) -> "PilotResult":
        """Smooth the pilot agreement counts and compute the error ratio."""
        if m_pilot < 1:
            raise JudgeCalError(f"m_pilot must be >= 1, got {m_pilot}")
        for name, agree in (("agree0_pilot", agree0_pilot), ("agree1_pilot", agree1_pilot)):
            if not 0 <= agree <= m_pilot:
                raise JudgeCalError(f"{name} must lie in [0, {m_pilot}], got {agree}")
        q0_tilde = (agree0_pilot + 1) / (m_pilot + 2)
        q1_tilde = (agree1_pilot + 1) / (m_pilot + 2)
        return cls(
            m_pilot=m_pilot,
            agree0_pilot=agree0_pilot,
            agree1_pilot=agree1_pilot,
            q0_tilde=q0_tilde,
            q1_tilde=q1_tilde,
            kappa_hat=error_ratio(q0_tilde, q1_tilde),
        )


@dataclass(frozen=True)
class AllocationPlan:
    m0: int
    m1: int
    m_total: int
    provisional_m1: int
    clamped: bool


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def error_ratio(q0_tilde: float, q1_tilde: float) -> float:
    """Ratio of the judge's error rate on true-0 items to that on true-1 items."""
    if not (0.0 <= q0_tilde <= 1.0 and 0.0 <= q1_tilde <= 1.0):
        raise JudgeCalError(f"accuracies must lie in [0, 1], got {q0_tilde!r}, {q1_tilde!r}")
    if q1_tilde >= 1.0:
        raise JudgeCalError("error ratio undefined: q1 = 1 leaves no true-1 errors")
    return (1.0 - q0_tilde) / (1.0 - q1_tilde)


def _provisional_m1(p: float, kappa: float, m_total: int) -> int:
    ratio = (1.0 / p - 1.0) * math.sqrt(kappa)
    return round_half_up(m_total / (1.0 + ratio))


def optimal_split(p_tilde: float, kappa: float, m_total: int) -> AllocationPlan:
    """Integer split of ``m_total`` with ``m0 / m1 ~ (1/p_tilde - 1) * sqrt(kappa)``.

    Each side receives at least one label.
    """
    if m_total < 2:
        raise BudgetError(f"need a budget of at least 2 labels, got {m_total}")
    if not 0.0 < p_tilde < 1.0:
        raise DegenerateProportionError(f"p_tilde must lie in (0, 1), got {p_tilde!r}")
    if not kappa > 0.0:
        raise JudgeCalError(f"kappa must be positive, got {kappa!r}")
    provisional = _provisional_m1(p_tilde, kappa, m_total)
    m1 = min(max(provisional, 1), m_total - 1)
    return AllocationPlan(
        m0=m_total - m1,
        m1=m1,
        m_total=m_total,
        provisional_m1=provisional,
        clamped=m1 != provisional,
    )


def adaptive_allocate(pilot: PilotResult, p_hat: float, m_total: int) -> AllocationPlan:
    """Allocate ``m_total`` calibration labels given a pilot sample.

    The pilot labels count toward the budget, so each class keeps at least
    ``m_pilot`` items.

    Raises:
        BudgetError: if the two pilot samples alone exceed ``m_total``.
        DegenerateProportionError: if ``p_hat`` is 0 or 1.
    """
    if 2 * pilot.m_pilot > m_total:
        raise BudgetError(
            f"pilot needs 2 * {pilot.m_pilot} labels but the budget is {m_total}"
        )
    if not 0.0 < p_hat < 1.0:
        raise DegenerateProportionError(
            f"p_hat must lie strictly inside (0, 1) to allocate, got {p_hat!r}"
        )
    provisional = _provisional_m1(p_hat, pilot.kappa_hat, m_total)
    m1 = min(max(provisional, pilot.m_pilot), m_total - pilot.m_pilot)
    return AllocationPlan(
        m0=m_total - m1,
        m1=m1,
        m_total=m_total,
        provisional_m1=provisional,
        clamped=m1 != provisional,
    )
