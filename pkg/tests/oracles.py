"""Independent reference implementations used only by the tests.

``reference_point_estimator`` and ``reference_confidence_interval`` are a
line-for-line port of the published reference routine, using scipy for the
normal quantile. They share no code with ``judgecal``.
"""

from math import sqrt

from scipy.stats import norm


def reference_clip(x, low=0.0, high=1.0):
    return max(low, min(high, x))


def reference_point_estimator(p, q0, q1):
    th = (p + q0 - 1) / (q0 + q1 - 1)
    return reference_clip(th)


def reference_confidence_interval(p, q0, q1, n, m0, m1, alpha=0.05):
    z = norm.ppf(1 - alpha / 2)
    p, q0, q1 = (n * p + z**2 / 2) / (n + z**2), (m0 * q0 + 1) / (m0 + 2), (m1 * q1 + 1) / (m1 + 2)
    n, m0, m1 = n + z**2, m0 + 2, m1 + 2
    th = (p + q0 - 1) / (q0 + q1 - 1)
    dth = 2 * z**2 * (-(1 - th) * q0 * (1 - q0) / m0 + th * q1 * (1 - q1) / m1)
    se = sqrt(p * (1 - p) / n + (1 - th) ** 2 * q0 * (1 - q0) / m0 + th**2 * q1 * (1 - q1) / m1) / (q0 + q1 - 1)
    return reference_clip(th + dth - z * se), reference_clip(th + dth + z * se)


def asymptotic_length(p, q0, q1, m0, m1, alpha=0.05):
    """Unclipped-then-clipped interval length with the test-set term removed."""
    z = norm.ppf(1 - alpha / 2)
    q0t, q1t = (m0 * q0 + 1) / (m0 + 2), (m1 * q1 + 1) / (m1 + 2)
    m0t, m1t = m0 + 2, m1 + 2
    th = (p + q0t - 1) / (q0t + q1t - 1)
    dth = 2 * z**2 * (-(1 - th) * q0t * (1 - q0t) / m0t + th * q1t * (1 - q1t) / m1t)
    se = sqrt((1 - th) ** 2 * q0t * (1 - q0t) / m0t + th**2 * q1t * (1 - q1t) / m1t) / (q0t + q1t - 1)
    return reference_clip(th + dth + z * se) - reference_clip(th + dth - z * se)


def untruncated_length(p, q0t, q1t, m0, m1, alpha=0.05):
    """2 z se with n -> inf, smoothed accuracies held fixed, no truncation."""
    z = norm.ppf(1 - alpha / 2)
    th = (p + q0t - 1) / (q0t + q1t - 1)
    m0t, m1t = m0 + 2, m1 + 2
    return 2 * z * sqrt((1 - th) ** 2 * q0t * (1 - q0t) / m0t + th**2 * q1t * (1 - q1t) / m1t) / (q0t + q1t - 1)


def brute_force_best_split(p, q0t, q1t, m_total, alpha=0.05):
    """Exhaustive minimum of the untruncated length over integer splits."""
    best = None
    for m1 in range(1, m_total):
        length = untruncated_length(p, q0t, q1t, m_total - m1, m1, alpha)
        if best is None or length < best[0]:
            best = (length, m_total - m1, m1)
    return best


def linear_scan_symmetric_plan(target, p, q0, q1, alpha=0.05, limit=100_000):
    """Smallest m with m0 = m1 = m reaching the target, by exhaustive scan."""
    for m in range(1, limit):
        if asymptotic_length(p, q0, q1, m, m, alpha) <= target:
            return m
    raise AssertionError("target not reached")


def exact_mean_point_estimate(theta, q0, q1, n, m0, m1):
    """E[clipped point estimate] by summing over the three binomial pmfs.

    Calibration outcomes with q0_hat + q1_hat <= 1 are dropped and the
    remaining mass renormalised.
    """
    import numpy as np
    from scipy.stats import binom

    p = (q0 + q1 - 1) * theta + (1 - q0)
    x = np.arange(n + 1)
    px = binom.pmf(x, n, p)
    a0, a1 = np.arange(m0 + 1), np.arange(m1 + 1)
    w = np.outer(binom.pmf(a0, m0, q0), binom.pmf(a1, m1, q1))
    g0, g1 = np.meshgrid(a0 / m0, a1 / m1, indexing="ij")
    denom = g0 + g1 - 1
    ok = denom > 0
    w = np.where(ok, w, 0.0)
    denom = np.where(ok, denom, 1.0)
    total = 0.0
    for i in np.nonzero(px > 1e-16)[0]:
        est = np.clip((x[i] / n + g0 - 1) / denom, 0.0, 1.0)
        total += px[i] * float((est * w).sum())
    return total / (px[px > 1e-16].sum() * w.sum())
