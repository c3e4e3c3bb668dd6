"""Seeded Monte Carlo engine for bias, coverage and interval-length studies.

Each replicate draws its own counter-based (Philox) stream keyed by
``(master_seed, config_index, replicate_index, stream)``, so results do not
depend on how replicates are scheduled across worker processes. Per-replicate
outcomes are merged in index order and summed with ``math.fsum``.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, NamedTuple, Optional, Sequence

import numpy as np

from judgecal.allocation import PilotResult, error_ratio, optimal_split, round_half_up
from judgecal.errors import JudgeCalError, NonIdentifiableError
from judgecal.estimator import confidence_interval, naive_interval
from judgecal.types import (
    CalibrationSummary,
    IntervalEstimate,
    OperatingPoint,
    TestSummary,
)

logger = logging.getLogger(__name__)

Allocation = Literal["symmetric", "adaptive", "oracle_ratio"]
ALLOCATIONS: tuple[str, ...] = ("symmetric", "adaptive", "oracle_ratio")

# independent substreams per allocation, so a symmetric run gives the same
# numbers alone or paired with an adaptive one
_STREAM = {"symmetric": 0, "adaptive": 1, "oracle_ratio": 2}

DEFAULT_THETAS: tuple[float, ...] = tuple(i / 20 for i in range(21))

CSV_COLUMNS: tuple[str, ...] = (
    "theta",
    "mean_p_hat",
    "mean_theta_hat",
    "naive_bias",
    "adj_bias",
    "naive_coverage",
    "adj_coverage",
    "naive_length",
    "adj_length_symmetric",
    "adj_length_adaptive",
    "reps",
    "degenerate",
)


@dataclass(frozen=True)
class SimConfig:
    theta: float
    op: OperatingPoint
    n: int = 1000
    m_total: int = 500
    allocation: Allocation = "symmetric"
    reps: int = 2000
    alpha: float = 0.05
    master_seed: int = 0
    m_pilot: int = 10

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise JudgeCalError(f"theta must lie in [0, 1], got {self.theta!r}")
        if self.reps < 1:
            raise JudgeCalError(f"reps must be >= 1, got {self.reps}")
        if self.n < 1:
            raise JudgeCalError(f"n must be >= 1, got {self.n}")
        if self.m_total < 2:
            raise JudgeCalError(f"m_total must be >= 2, got {self.m_total}")
        if self.allocation not in ALLOCATIONS:
            raise JudgeCalError(f"unknown allocation {self.allocation!r}")
        if self.allocation == "adaptive" and 2 * self.m_pilot > self.m_total:
            raise JudgeCalError(
                f"m_pilot={self.m_pilot} needs a budget of at least {2 * self.m_pilot}"
            )
        if self.allocation == "oracle_ratio" and self.op.q1 >= 1.0:
            raise JudgeCalError("oracle_ratio allocation needs q1 < 1")
        if not 0 <= self.master_seed < 2**64:
            raise JudgeCalError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ReplicateRecord:
    p_hat: float
    q0_hat: float
    q1_hat: float
    m0: int
    m1: int
    theta_hat: Optional[float]
    interval: Optional[IntervalEstimate]
    covered: bool
    length: float
    naive_interval: IntervalEstimate
    naive_covered: bool
    degenerate: bool


@dataclass(frozen=True)
class GridRow:
    theta: float
    mean_p_hat: float
    mean_theta_hat: float
    naive_bias: float
    adj_bias: float
    naive_coverage: float
    adj_coverage: float
    naive_length: float
    adj_length_symmetric: Optional[float]
    adj_length_adaptive: Optional[float]
    reps: int
    degenerate: int


@dataclass(frozen=True)
class GridSummary:
    rows: tuple[GridRow, ...]
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(_csv_cell(getattr(row, c)) for c in CSV_COLUMNS))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "meta": self.meta,
            "columns": list(CSV_COLUMNS),
            "rows": [
                {c: _json_value(getattr(row, c)) for c in CSV_COLUMNS} for row in self.rows
            ],
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _csv_cell(value) -> str:
    if value is None:
        return ""
    return repr(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def replicate_rng(
    master_seed: int, config_index: int, replicate_index: int, stream: int = 0
) -> np.random.Generator:
    """Counter-based generator for one replicate of one config."""
    seq = np.random.SeedSequence(
        master_seed, spawn_key=(config_index, replicate_index, stream)
    )
    return np.random.Generator(np.random.Philox(seq))


def _adaptive_m1(p_hat: float, kappa: float, m_total: int, floor: int) -> tuple[int, int]:
    # same rule as adaptive_allocate, extended to p_hat in {0, 1} by its limit
    if p_hat <= 0.0:
        provisional = 0
    elif p_hat >= 1.0:
        provisional = m_total
    else:
        provisional = round_half_up(m_total / (1.0 + (1.0 / p_hat - 1.0) * math.sqrt(kappa)))
    m1 = min(max(provisional, floor), m_total - floor)
    return m_total - m1, m1


def simulate_replicate(
    config: SimConfig, replicate_index: int, config_index: int = 0
) -> ReplicateRecord:
    """Draw one synthetic test set and calibration set and evaluate both methods.

    Draw order on the replicate's stream: test count, then (adaptive only)
    the two pilot counts, then the two calibration counts.
    """
    op = config.op
    rng = replicate_rng(
        config.master_seed, config_index, replicate_index, _STREAM[config.allocation]
    )
    p_true = (op.q0 + op.q1 - 1.0) * config.theta + (1.0 - op.q0)
    judged = int(rng.binomial(config.n, min(max(p_true, 0.0), 1.0)))
    test = TestSummary(config.n, judged)
    p_hat = test.p_hat

    agree0 = agree1 = 0
    if config.allocation == "symmetric":
        m0 = math.ceil(config.m_total / 2)
        m1 = config.m_total - m0
        base0 = base1 = 0
    elif config.allocation == "adaptive":
        mp = config.m_pilot
        agree0 = int(rng.binomial(mp, op.q0))
        agree1 = int(rng.binomial(mp, op.q1))
        pilot = PilotResult.from_counts(mp, agree0, agree1)
        m0, m1 = _adaptive_m1(p_hat, pilot.kappa_hat, config.m_total, mp)
        base0 = base1 = mp
    else:
        kappa = error_ratio(op.q0, op.q1)
        if 0.0 < p_hat < 1.0 and kappa > 0.0:
            plan = optimal_split(p_hat, kappa, config.m_total)
            m0, m1 = plan.m0, plan.m1
        else:
            m0, m1 = _adaptive_m1(p_hat, max(kappa, 1e-300), config.m_total, 1)
        base0 = base1 = 0
    agree0 += int(rng.binomial(m0 - base0, op.q0))
    agree1 += int(rng.binomial(m1 - base1, op.q1))
    cal = CalibrationSummary(m0, m1, agree0, agree1)

    naive = naive_interval(test, config.alpha)
    naive_covered = naive.covers(config.theta)

    interval: Optional[IntervalEstimate] = None
    degenerate = not op.identifiable
    if not degenerate:
        try:
            interval = confidence_interval(test, cal, config.alpha)
        except NonIdentifiableError:
            degenerate = True
    if degenerate:
        return ReplicateRecord(
            p_hat=p_hat,
            q0_hat=cal.q0_hat,
            q1_hat=cal.q1_hat,
            m0=m0,
            m1=m1,
            theta_hat=None,
            interval=None,
            covered=False,
            length=1.0,
            naive_interval=naive,
            naive_covered=naive_covered,
            degenerate=True,
        )
    return ReplicateRecord(
        p_hat=p_hat,
        q0_hat=cal.q0_hat,
        q1_hat=cal.q1_hat,
        m0=m0,
        m1=m1,
        theta_hat=interval.theta_hat,
        interval=interval,
        covered=interval.covers(config.theta),
        length=interval.length,
        naive_interval=naive,
        naive_covered=naive_covered,
        degenerate=False,
    )


class _Outcome(NamedTuple):
    p_hat: float
    theta_hat: float  # nan when degenerate
    covered: bool
    length: float
    naive_covered: bool
    naive_length: float
    degenerate: bool


def _run_chunk(task: tuple[SimConfig, int, int, int]) -> list[_Outcome]:
    config, config_index, start, stop = task
    out = []
    for r in range(start, stop):
        rec = simulate_replicate(config, r, config_index)
        out.append(
            _Outcome(
                rec.p_hat,
                math.nan if rec.theta_hat is None else rec.theta_hat,
                rec.covered,
                rec.length,
                rec.naive_covered,
                rec.naive_interval.length,
                rec.degenerate,
            )
        )
    return out


def _collect(
    configs: Sequence[SimConfig], workers: int, chunk_size: int
) -> list[list[_Outcome]]:
    tasks = []
    for ci, config in enumerate(configs):
        for start in range(0, config.reps, chunk_size):
            tasks.append((config, ci, start, min(start + chunk_size, config.reps)))
    per_config: list[list[_Outcome]] = [[] for _ in configs]
    if workers <= 1:
        results: Iterable[list[_Outcome]] = map(_run_chunk, tasks)
        for task, chunk in zip(tasks, results):
            per_config[task[1]].extend(chunk)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map yields in submission order, which is replicate order
            for task, chunk in zip(tasks, pool.map(_run_chunk, tasks)):
                per_config[task[1]].extend(chunk)
    return per_config


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values) if values else math.nan


def _row(config: SimConfig, outcomes: list[_Outcome]) -> GridRow:
    reps = len(outcomes)
    thetas = [o.theta_hat for o in outcomes if not o.degenerate]
    mean_p = _mean([o.p_hat for o in outcomes])
    mean_t = _mean(thetas)
    length = _mean([o.length for o in outcomes])
    symmetric = config.allocation == "symmetric"
    return GridRow(
        theta=config.theta,
        mean_p_hat=mean_p,
        mean_theta_hat=mean_t,
        naive_bias=mean_p - config.theta,
        adj_bias=mean_t - config.theta,
        naive_coverage=sum(o.naive_covered for o in outcomes) / reps,
        adj_coverage=sum(o.covered for o in outcomes) / reps,
        naive_length=_mean([o.naive_length for o in outcomes]),
        adj_length_symmetric=length if symmetric else None,
        adj_length_adaptive=None if symmetric else length,
        reps=reps,
        degenerate=sum(o.degenerate for o in outcomes),
    )


def _meta(configs: Sequence[SimConfig]) -> dict:
    first = configs[0]
    return {
        "q0": first.op.q0,
        "q1": first.op.q1,
        "n": first.n,
        "m_total": first.m_total,
        "reps": first.reps,
        "alpha": first.alpha,
        "master_seed": first.master_seed,
        "m_pilot": first.m_pilot,
        "allocation": first.allocation,
        "naive_interval": "adjusted-wald",
    }


def run_grid(
    configs: Sequence[SimConfig], workers: int = 1, chunk_size: int = 250
) -> GridSummary:
    """One summary row per config, in input order.

    The row's interval length goes in the column for the config's
    allocation; the other length column is None.
    """
    if not configs:
        raise JudgeCalError("run_grid needs at least one config")
    per_config = _collect(configs, workers, chunk_size)
    rows = tuple(_row(c, outs) for c, outs in zip(configs, per_config))
    return GridSummary(rows=rows, meta=_meta(configs))


def compare_allocations(
    configs: SimConfig | Sequence[SimConfig],
    adaptive: Allocation = "adaptive",
    workers: int = 1,
    chunk_size: int = 250,
) -> GridSummary:
    """Run each config under symmetric and adaptive allocation.

    ``config.allocation`` is ignored. Bias and coverage columns come from the
    symmetric run; both length columns are filled.
    """
    if isinstance(configs, SimConfig):
        configs = [configs]
    if adaptive == "symmetric":
        raise JudgeCalError("adaptive must be 'adaptive' or 'oracle_ratio'")
    sym = [replace(c, allocation="symmetric") for c in configs]
    ada = [replace(c, allocation=adaptive) for c in configs]
    # keep config indices aligned so both runs share the per-config key
    per_sym = _collect(sym, workers, chunk_size)
    per_ada = _collect(ada, workers, chunk_size)
    rows = []
    for cs, ca, os_, oa in zip(sym, ada, per_sym, per_ada):
        base = _row(cs, os_)
        rows.append(replace(base, adj_length_adaptive=_row(ca, oa).adj_length_adaptive))
    meta = _meta(sym)
    meta["allocation"] = f"symmetric+{adaptive}"
    return GridSummary(rows=tuple(rows), meta=meta)


def standard_grid(
    q0: float = 0.7,
    q1: float = 0.9,
    n: int = 1000,
    m_total: int = 500,
    reps: int = 2000,
    alpha: float = 0.05,
    master_seed: int = 0,
    allocation: Allocation = "symmetric",
    m_pilot: int = 10,
    thetas: Sequence[float] = DEFAULT_THETAS,
) -> list[SimConfig]:
    """Configs for a theta sweep at a fixed judge and budget."""
    op = OperatingPoint(q0, q1)
    return [
        SimConfig(
            theta=t,
            op=op,
            n=n,
            m_total=m_total,
            allocation=allocation,
            reps=reps,
            alpha=alpha,
            master_seed=master_seed,
            m_pilot=m_pilot,
        )
        for t in thetas
    ]
