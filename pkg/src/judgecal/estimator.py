"""Closed-form estimation math.

Naive and bias-adjusted point estimates, the smoothed ("add two successes
and two failures") quantities, the delta-method variance, the adjusted
Wald interval, analytic bias expressions and calibration-size planning.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from statistics import NormalDist
from typing import Literal, Optional

from judgecal.errors import (
    BudgetError,
    EmptyTestSetError,
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

SplitPolicy = Literal["symmetric", "optimal"]

_STANDARD_NORMAL = NormalDist()


def clip(x: float, low: float = 0.0, high: float = 1.0) -> float:
    return max(low, min(high, x))


def normal_quantile(alpha: float) -> float:
    """Two-sided critical value: the ``1 - alpha/2`` standard normal quantile."""
    if not 0.0 < alpha < 1.0:
        raise JudgeCalError(f"alpha must lie in (0, 1), got {alpha!r}")
    return _STANDARD_NORMAL.inv_cdf(1.0 - alpha / 2.0)


def naive_estimate(test: TestSummary) -> float:
    """Fraction of test instances the judge labelled correct."""
    if test.n == 0:
        raise EmptyTestSetError("test set is empty (n = 0)")
    return test.judged_correct / test.n


def forward_judged_rate(theta: float, op: OperatingPoint) -> float:
    """Population rate at which the judge reports `correct` given accuracy theta."""
    return (op.q0 + op.q1 - 1.0) * theta + (1.0 - op.q0)


def adjusted_point(p_hat: float, op: OperatingPoint) -> float:
    """Rogan-Gladen inversion of the judged rate, clipped to [0, 1].

    Raises:
        NonIdentifiableError: if ``q0 + q1 <= 1``.
    """
    op.require_identifiable()
    raw = (p_hat + op.q0 - 1.0) / (op.q0 + op.q1 - 1.0)
    return clip(raw)


def delta_variance(
    p_hat: float,
    q0_hat: float,
    q1_hat: float,
    theta_hat: float,
    n: float,
    m0: float,
    m1: float,
) -> float:
    """First-order delta-method variance of the adjusted estimator.

    The three terms are the test-set, true-0 calibration and true-1
    calibration contributions. ``n`` may be ``math.inf``, which drops the
    test-set term.
    """
    denom = q0_hat + q1_hat - 1.0
    if denom <= 0.0:
        raise NonIdentifiableError(q0_hat, q1_hat, names=("q0_hat", "q1_hat"))
    if not (n > 0 and m0 > 0 and m1 > 0):
        raise JudgeCalError(f"sample sizes must be positive, got n={n}, m0={m0}, m1={m1}")
    test_term = 0.0 if math.isinf(n) else p_hat * (1.0 - p_hat) / n
    total = (
        test_term
        + (1.0 - theta_hat) ** 2 * q0_hat * (1.0 - q0_hat) / m0
        + theta_hat**2 * q1_hat * (1.0 - q1_hat) / m1
    )
    return total / denom**2


def _adjusted(
    p_t: float, n_t: float, q0_t: float, m0_t: float, q1_t: float, m1_t: float, z: float
) -> AdjustedQuantities:
    denom = q0_t + q1_t - 1.0
    if denom <= 0.0:
        raise NonIdentifiableError(q0_t, q1_t, names=("q0_tilde", "q1_tilde"))
    theta_t = (p_t + q0_t - 1.0) / denom
    # no denominator on the shift, unlike the variance below
    dtheta_t = 2 * z**2 * (
        -(1 - theta_t) * q0_t * (1 - q0_t) / m0_t + theta_t * q1_t * (1 - q1_t) / m1_t
    )
    return AdjustedQuantities(
        n_t=n_t,
        m0_t=m0_t,
        m1_t=m1_t,
        p_t=p_t,
        q0_t=q0_t,
        q1_t=q1_t,
        theta_t=theta_t,
        dtheta_t=dtheta_t,
    )


def _smoothed_test(successes: float, n: float, z: float) -> tuple[float, float]:
    if math.isinf(n):
        raise JudgeCalError("use the proportion form for n = inf")
    return (successes + z**2 / 2) / (n + z**2), n + z**2


def adjust_quantities(
    test: TestSummary, cal: CalibrationSummary, alpha: float = 0.05
) -> AdjustedQuantities:
    """Smoothed sample sizes, proportions and interval center from raw counts.

    Empty calibration sides are allowed: smoothing alone gives ``q_t = 1/2``.
    """
    z = normal_quantile(alpha)
    p_t, n_t = _smoothed_test(test.judged_correct, test.n, z)
    return _adjusted(
        p_t,
        n_t,
        (cal.agree0 + 1) / (cal.m0 + 2),
        cal.m0 + 2,
        (cal.agree1 + 1) / (cal.m1 + 2),
        cal.m1 + 2,
        z,
    )


def _bounds(aq: AdjustedQuantities, z: float) -> tuple[float, float]:
    test_term = 0.0 if math.isinf(aq.n_t) else aq.p_t * (1 - aq.p_t) / aq.n_t
    se = math.sqrt(
        test_term
        + (1 - aq.theta_t) ** 2 * aq.q0_t * (1 - aq.q0_t) / aq.m0_t
        + aq.theta_t**2 * aq.q1_t * (1 - aq.q1_t) / aq.m1_t
    ) / (aq.q0_t + aq.q1_t - 1)
    center = aq.theta_t + aq.dtheta_t
    return clip(center - z * se), clip(center + z * se)


def interval_from_proportions(
    p_hat: float,
    q0_hat: float,
    q1_hat: float,
    n: float,
    m0: float,
    m1: float,
    alpha: float = 0.05,
) -> IntervalEstimate:
    """Adjusted interval from observed proportions and sample sizes.

    Sizes may be non-integer. ``n = math.inf`` gives the calibration-only
    limit used for planning.
    """
    z = normal_quantile(alpha)
    if math.isinf(n):
        p_t, n_t = p_hat, math.inf
    else:
        p_t, n_t = (n * p_hat + z**2 / 2) / (n + z**2), n + z**2
    aq = _adjusted(
        p_t,
        n_t,
        (m0 * q0_hat + 1) / (m0 + 2),
        m0 + 2,
        (m1 * q1_hat + 1) / (m1 + 2),
        m1 + 2,
        z,
    )
    lower, upper = _bounds(aq, z)
    theta_hat = adjusted_point(p_hat, OperatingPoint(q0_hat, q1_hat))
    return IntervalEstimate(theta_hat=theta_hat, lower=lower, upper=upper, alpha=alpha, z=z)


def confidence_interval(
    test: TestSummary, cal: CalibrationSummary, alpha: float = 0.05
) -> IntervalEstimate:
    """Bias-adjusted point estimate and clipped ``(1 - alpha)`` interval.

    The point estimate uses the raw proportions; the interval uses the
    smoothed ones. When ``m0`` or ``m1`` is zero only the interval is
    defined and ``theta_hat`` is None.

    Raises:
        EmptyTestSetError: if ``test.n == 0``.
        NonIdentifiableError: if the smoothed or raw accuracies sum to <= 1.
    """
    if test.n == 0:
        raise EmptyTestSetError("test set is empty (n = 0)")
    theta_hat: Optional[float] = None
    if cal.m0 > 0 and cal.m1 > 0:
        q0_hat, q1_hat = cal.q0_hat, cal.q1_hat
        if q0_hat + q1_hat <= 1.0:
            raise NonIdentifiableError(q0_hat, q1_hat, names=("q0_hat", "q1_hat"))
        theta_hat = adjusted_point(test.p_hat, OperatingPoint(q0_hat, q1_hat))
    aq = adjust_quantities(test, cal, alpha)
    z = normal_quantile(alpha)
    lower, upper = _bounds(aq, z)
    return IntervalEstimate(theta_hat=theta_hat, lower=lower, upper=upper, alpha=alpha, z=z)


def naive_interval(test: TestSummary, alpha: float = 0.05) -> IntervalEstimate:
    """Adjusted Wald interval for the judged rate itself, ignoring judge error.

    Uses the same test-set smoothing as the adjusted interval
    (``z**2 / 2`` pseudo-successes and pseudo-failures).
    """
    z = normal_quantile(alpha)
    p_t, n_t = _smoothed_test(test.judged_correct, test.n, z)
    half = z * math.sqrt(p_t * (1 - p_t) / n_t)
    return IntervalEstimate(
        theta_hat=naive_estimate(test),
        lower=clip(p_t - half),
        upper=clip(p_t + half),
        alpha=alpha,
        z=z,
    )


def naive_bias(theta: float, op: OperatingPoint) -> float:
    """Expected naive estimate minus theta.

    Positive below ``(1 - q0) / (2 - q0 - q1)``, negative above it, and zero
    for a perfect judge.
    """
    if op.q0 + op.q1 >= 2.0:
        return 0.0
    return (1.0 - op.q0) - (2.0 - op.q0 - op.q1) * theta


def approx_adjusted_bias(theta: float, q: float, m: int) -> float:
    """Second-order delta-method bias of the adjusted estimator.

    Symmetric case only: ``q0 = q1 = q`` and ``m0 = m1 = m``.
    """
    if not 0.5 < q <= 1.0:
        raise OutOfRegimeError(f"q must lie in (0.5, 1], got {q!r}")
    if m < 1:
        raise OutOfRegimeError(f"m must be >= 1, got {m}")
    return (1.0 / m) * q / (2 * q - 1) ** 2 * (2 * theta - 1) * (1 - q)


def _asymptotic_length(
    p_hat: float, op: OperatingPoint, m0: int, m1: int, alpha: float
) -> float:
    est = interval_from_proportions(p_hat, op.q0, op.q1, math.inf, m0, m1, alpha)
    return est.length


def _split(policy: SplitPolicy, total: int, p_hat: float, kappa: float) -> tuple[int, int]:
    if policy == "symmetric":
        return total // 2, total // 2
    from judgecal.allocation import optimal_split

    plan = optimal_split(p_hat, kappa, total)
    return plan.m0, plan.m1


def plan_calibration_size(
    target_length: float,
    p_hat: float,
    op: OperatingPoint,
    split_policy: SplitPolicy = "symmetric",
    alpha: float = 0.05,
    max_total: int = 10**9,
) -> tuple[int, int]:
    """Smallest calibration sizes whose interval length is at most the target.

    Uses the test-set-free limit (``n -> inf``) of the clipped interval.
    The symmetric policy searches ``m0 = m1``; the optimal policy searches
    the total budget and splits it with :func:`optimal_split` using the
    error ratio of ``op``.

    Raises:
        NonIdentifiableError: if ``op`` is not identifiable.
        BudgetError: if no budget up to ``max_total`` reaches the target.
    """
    op.require_identifiable()
    if not 0.0 < target_length <= 1.0:
        raise JudgeCalError(f"target_length must lie in (0, 1], got {target_length!r}")
    if split_policy not in ("symmetric", "optimal"):
        raise JudgeCalError(f"unknown split policy {split_policy!r}")
    kappa = 1.0
    if split_policy == "optimal":
        from judgecal.allocation import error_ratio

        kappa = error_ratio(op.q0, op.q1)
        if not 0.0 < p_hat < 1.0:
            raise JudgeCalError(f"optimal split needs p_hat in (0, 1), got {p_hat!r}")

    # search over the total budget, stepping by 2 under the symmetric policy
    step = 2 if split_policy == "symmetric" else 1

    def ok(units: int) -> bool:
        m0, m1 = _split(split_policy, units * step, p_hat, kappa)
        return _asymptotic_length(p_hat, op, m0, m1, alpha) <= target_length

    lo = 1 if split_policy == "symmetric" else 2
    if ok(lo):
        return _split(split_policy, lo * step, p_hat, kappa)
    hi = 2 * lo
    while not ok(hi):
        lo = hi
        hi *= 2
        if hi * step > max_total:
            raise BudgetError(
                f"target length {target_length} not reached within {max_total} labels"
            )
    # invariant: ok(hi) and not ok(lo)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return _split(split_policy, hi * step, p_hat, kappa)
