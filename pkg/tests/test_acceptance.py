"""Acceptance criteria, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the pytest terminal
summary. Monte Carlo criteria run at 2,000 replications; pass
``--run-full`` to also run the 10,000-replication grids.
"""

import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from judgecal import (
    OperatingPoint,
    adjusted_point,
    error_ratio,
    forward_judged_rate,
    interval_from_proportions,
    naive_bias,
    optimal_split,
)
from judgecal.montecarlo import DEFAULT_THETAS, compare_allocations, standard_grid, run_grid
from oracles import (
    brute_force_best_split,
    reference_confidence_interval,
    reference_point_estimator,
    untruncated_length,
)

JUDGE = OperatingPoint(0.7, 0.9)
DESK_REPS = 2000
SEED = 0


@pytest.fixture
def criterion(acceptance_log):
    @contextmanager
    def run(number, title, limit_s=None):
        start = time.perf_counter()
        detail = []
        try:
            yield detail
            elapsed = time.perf_counter() - start
            if limit_s is not None:
                assert elapsed < limit_s, f"took {elapsed:.1f}s, limit {limit_s}s"
        except BaseException as exc:
            msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            line = f"FAIL  {number:>2}. {title}: {msg}"
            acceptance_log.append(line)
            print(line)
            raise
        elapsed = time.perf_counter() - start
        extra = f" ({'; '.join(detail)})" if detail else ""
        line = f"PASS  {number:>2}. {title} [{elapsed:.2f}s]{extra}"
        acceptance_log.append(line)
        print(line)

    return run


@pytest.fixture(scope="session")
def default_symmetric_grid():
    start = time.perf_counter()
    summary = run_grid(standard_grid(reps=DESK_REPS, master_seed=SEED))
    return summary, time.perf_counter() - start


def test_01_oracle_equivalence(criterion):
    with criterion(1, "interval matches the reference routine to 1e-12", limit_s=5) as detail:
        rng = np.random.default_rng(SEED)
        checked = 0
        worst = 0.0
        while checked < 1000:
            p, q0, q1 = rng.uniform(0, 1, size=3)
            if not (0 < p < 1 and 0 < q0 < 1 and 0 < q1 < 1) or q0 + q1 <= 1.05:
                continue
            n = int(rng.integers(10, 10**6 + 1))
            m0, m1 = (int(v) for v in rng.integers(5, 10**4 + 1, size=2))
            est = interval_from_proportions(p, q0, q1, n, m0, m1, 0.05)
            lo, hi = reference_confidence_interval(p, q0, q1, n, m0, m1, 0.05)
            worst = max(worst, abs(est.lower - lo), abs(est.upper - hi))
            assert abs(est.theta_hat - reference_point_estimator(p, q0, q1)) <= 1e-12
            checked += 1
        assert worst <= 1e-12, f"max deviation {worst:.3g}"
        detail.append(f"{checked} inputs, max deviation {worst:.2g}")


def test_02_length_anchor(criterion):
    with criterion(2, "length at p=0.3, q=(0.7,0.9), n=1e9, m0=m1=200 in [0.08, 0.12]") as detail:
        est = interval_from_proportions(0.3, 0.7, 0.9, 10**9, 200, 200, 0.05)
        assert 0.08 <= est.length <= 0.12, f"length {est.length}"
        detail.append(f"length {est.length:.4f}")


def test_03_crossover(criterion):
    with criterion(3, "naive bias zero at 0.75, positive below, negative above"):
        assert naive_bias(0.75, JUDGE) == 0.0
        for theta in DEFAULT_THETAS:
            b = naive_bias(theta, JUDGE)
            if theta < 0.75:
                assert b > 0, f"bias {b} at theta {theta}"
            elif theta > 0.75:
                assert b < 0, f"bias {b} at theta {theta}"


def test_04_coverage(criterion, default_symmetric_grid):
    summary, elapsed = default_symmetric_grid
    with criterion(4, "coverage at q=(0.7,0.9), n=1000, m0=m1=250, 2000 reps") as detail:
        assert elapsed < 60, f"grid took {elapsed:.1f}s"
        bad_adj = [
            (r.theta, r.adj_coverage)
            for r in summary.rows
            if 0.1 <= r.theta <= 0.9 and not 0.93 <= r.adj_coverage <= 0.97
        ]
        assert not bad_adj, f"adjusted coverage outside [0.93, 0.97]: {bad_adj}"
        bad_naive = [
            (r.theta, r.naive_coverage)
            for r in summary.rows
            if abs(r.theta - 0.75) > 0.1 + 1e-9 and r.naive_coverage >= 0.2
        ]
        assert not bad_naive, f"naive coverage >= 0.2: {bad_naive}"
        inner = [r.adj_coverage for r in summary.rows if 0.1 <= r.theta <= 0.9]
        detail.append(f"adjusted {min(inner):.4f}..{max(inner):.4f}, grid {elapsed:.1f}s")


def test_05_bias(criterion, default_symmetric_grid):
    summary, _ = default_symmetric_grid
    with criterion(5, "|mean theta_hat - theta| < 0.02 and mean p_hat near forward rate") as detail:
        bad_theta = [(r.theta, round(r.adj_bias, 5)) for r in summary.rows if not abs(r.adj_bias) < 0.02]
        bad_p = [
            (r.theta, r.mean_p_hat)
            for r in summary.rows
            if not abs(r.mean_p_hat - forward_judged_rate(r.theta, JUDGE)) < 0.02
        ]
        assert not bad_p, f"mean p_hat off the forward relation: {bad_p}"
        assert not bad_theta, f"adjusted bias >= 0.02 at (theta, bias) {bad_theta}"
        worst = max(abs(r.adj_bias) for r in summary.rows)
        detail.append(f"worst |bias| {worst:.4f}")


def test_06_bias_dominance(criterion):
    with criterion(6, "adjusted bias below naive bias at q=0.75, m0=m1=100", limit_s=60) as detail:
        configs = standard_grid(q0=0.75, q1=0.75, n=1000, m_total=200, reps=DESK_REPS, master_seed=SEED)
        summary = run_grid(configs)
        op = OperatingPoint(0.75, 0.75)
        checked = 0
        for row in summary.rows:
            if abs(2 * row.theta - 1) < 0.1 - 1e-9:
                continue
            assert abs(row.adj_bias) < abs(naive_bias(row.theta, op)), (
                f"theta {row.theta}: adjusted {row.adj_bias:.4f}, "
                f"naive {naive_bias(row.theta, op):.4f}"
            )
            checked += 1
        detail.append(f"{checked} grid points")


def test_07_split_optimality(criterion):
    with criterion(7, "optimal split within 1% of brute-force minimum on 50 tuples", limit_s=5) as detail:
        rng = np.random.default_rng(SEED)
        misses = []
        for _ in range(50):
            p = float(rng.uniform(0.2, 0.9))
            q0, q1 = (float(v) for v in rng.uniform(0.9, 0.99, size=2))
            m = int(rng.integers(50, 1001))
            plan = optimal_split(p, error_ratio(q0, q1), m)
            best, _, _ = brute_force_best_split(p, q0, q1, m)
            ratio = untruncated_length(p, q0, q1, plan.m0, plan.m1) / best
            if ratio > 1.01:
                misses.append((round(p, 3), round(q0, 3), round(q1, 3), m, round(float(ratio), 4)))
        assert not misses, f"{len(misses)}/50 tuples over 1% (p, q0, q1, m, ratio): {misses}"
        detail.append("50 tuples")


def test_08_allocation_benefit(criterion):
    with criterion(8, "adaptive length <= 1.02x symmetric, >= 1% shorter at 0.1 and 0.9",
                   limit_s=120) as detail:
        summary = compare_allocations(standard_grid(reps=DESK_REPS, master_seed=SEED, m_pilot=10))
        worst = 0.0
        for row in summary.rows:
            ratio = row.adj_length_adaptive / row.adj_length_symmetric
            worst = max(worst, ratio)
            assert ratio <= 1.02, f"theta {row.theta}: ratio {ratio:.4f}"
            if row.theta in (0.1, 0.9):
                assert ratio <= 0.99, f"theta {row.theta}: ratio {ratio:.4f}"
        at = {r.theta: r.adj_length_adaptive / r.adj_length_symmetric for r in summary.rows}
        detail.append(f"max ratio {worst:.4f}, at 0.1 {at[0.1]:.4f}, at 0.9 {at[0.9]:.4f}")


def test_09_determinism(criterion, tmp_path):
    with criterion(9, "simulate output byte-identical across runs and workers {1, 4}",
                   limit_s=60) as detail:
        outputs = []
        for run, workers in enumerate((1, 1, 4)):
            for fmt in ("csv", "json"):
                out = tmp_path / f"run{run}.{fmt}"
                cmd = [sys.executable, "-m", "judgecal", "simulate", "--reps", "300",
                       "--seed", "123", "--workers", str(workers), "--format", fmt,
                       "--output", str(out)]
                subprocess.run(cmd, check=True)
            outputs.append(
                ((tmp_path / f"run{run}.csv").read_bytes(), (tmp_path / f"run{run}.json").read_bytes())
            )
        assert outputs[0] == outputs[1], "two single-worker runs differ"
        assert outputs[0] == outputs[2], "1 and 4 workers differ"
        detail.append(f"{len(outputs[0][0])} CSV bytes")


def test_10_round_trip(criterion):
    with criterion(10, "adjusted_point inverts forward_judged_rate to 1e-12") as detail:
        rng = np.random.default_rng(SEED)
        checked = 0
        worst = 0.0
        while checked < 10_000:
            theta, q0, q1 = (float(v) for v in rng.uniform(0, 1, size=3))
            if q0 + q1 <= 1.05:
                continue
            op = OperatingPoint(q0, q1)
            worst = max(worst, abs(adjusted_point(forward_judged_rate(theta, op), op) - theta))
            checked += 1
        assert worst <= 1e-12, f"max error {worst:.3g}"
        detail.append(f"max error {worst:.2g}")


@pytest.mark.slow
def test_full_scale_standard_grid(criterion):
    """The 10,000-replication version of criteria 4, 5 and 8."""
    with criterion("F", "full-scale grid, 10,000 reps") as detail:
        summary = compare_allocations(standard_grid(reps=10_000, master_seed=SEED), workers=4)
        for row in summary.rows:
            if 0.1 <= row.theta <= 0.9:
                assert 0.93 <= row.adj_coverage <= 0.97, (row.theta, row.adj_coverage)
        detail.append(
            "adjusted coverage "
            + ", ".join(f"{r.theta:g}:{r.adj_coverage:.3f}" for r in summary.rows)
        )
