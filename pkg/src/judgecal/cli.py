"""Command-line interface: ``judgecal {report,simulate,allocate,plan}``.

Exit codes: 0 success, 1 input error, 2 non-identifiable judge,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from judgecal.allocation import PilotResult, adaptive_allocate
from judgecal.dataio import (
    EvaluationReport,
    build_report,
    detect_format,
    ingest_calibration,
    ingest_judgments,
    iter_calibration,
)
from judgecal.errors import InvariantViolation, JudgeCalError, NonIdentifiableError
from judgecal.estimator import plan_calibration_size
from judgecal.montecarlo import (
    DEFAULT_THETAS,
    GridSummary,
    compare_allocations,
    standard_grid,
    run_grid,
)
from judgecal.types import OperatingPoint

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NON_IDENTIFIABLE = 2
EXIT_INVARIANT = 3

FULL_REPS = 10_000

# simulation settings, also accepted as keys of a --config JSON file
SIM_DEFAULTS = {
    "theta_grid": None,
    "q0": 0.7,
    "q1": 0.9,
    "n": 1000,
    "m_total": 500,
    "reps": 2000,
    "alpha": 0.05,
    "seed": 0,
    "allocation": "compare",
    "m_pilot": 10,
}

log = logging.getLogger("judgecal")


class UsageError(JudgeCalError):
    pass


def _emit(text: str, output: Optional[str]) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(output).write_text(text, encoding="utf-8")


def _open_input(path: str, fmt: Optional[str]):
    fmt = fmt or detect_format(path)
    return open(path, "rb"), fmt


def _render_report(report: EvaluationReport, fmt: str) -> str:
    if fmt == "json":
        return report.to_json()
    if fmt == "csv":
        return report.to_csv()
    return report.to_text()


def cmd_report(args: argparse.Namespace) -> int:
    stream, fmt = _open_input(args.judgments, args.input_format)
    with stream:
        test = ingest_judgments(stream, fmt)
    stream, fmt = _open_input(args.calibration, args.input_format)
    with stream:
        cal = ingest_calibration(stream, fmt)
    report = build_report(test, cal, args.alpha)
    _emit(_render_report(report, args.format), args.output)
    return EXIT_OK


def _theta_grid(spec) -> tuple[float, ...]:
    if spec is None:
        return DEFAULT_THETAS
    if isinstance(spec, (list, tuple)):
        values = [float(v) for v in spec]
    else:
        try:
            values = [float(v) for v in str(spec).split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"--theta-grid must be comma-separated numbers, got {spec!r}")
    if not values:
        raise UsageError("--theta-grid is empty")
    return tuple(values)


def _sim_settings(args: argparse.Namespace) -> dict:
    settings = dict(SIM_DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc.msg}")
        unknown = set(loaded) - set(SIM_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        settings.update(loaded)
    for key in SIM_DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    if args.full:
        settings["reps"] = FULL_REPS
    return settings


def cmd_simulate(args: argparse.Namespace) -> int:
    s = _sim_settings(args)
    if s["allocation"] not in ("symmetric", "adaptive", "oracle_ratio", "compare"):
        raise UsageError(f"unknown allocation {s['allocation']!r}")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    compare = s["allocation"] == "compare"
    configs = standard_grid(
        q0=s["q0"],
        q1=s["q1"],
        n=s["n"],
        m_total=s["m_total"],
        reps=s["reps"],
        alpha=s["alpha"],
        master_seed=s["seed"],
        allocation="symmetric" if compare else s["allocation"],
        m_pilot=s["m_pilot"],
        thetas=_theta_grid(s["theta_grid"]),
    )
    if compare:
        summary: GridSummary = compare_allocations(configs, workers=args.workers)
    else:
        summary = run_grid(configs, workers=args.workers)
    degenerate = sum(r.degenerate for r in summary.rows)
    if degenerate:
        total = sum(r.reps for r in summary.rows)
        log.warning("%d of %d replicates were degenerate (q0 + q1 <= 1)", degenerate, total)
    text = summary.to_json() if args.format == "json" else summary.to_csv()
    _emit(text, args.output)
    return EXIT_OK


def cmd_allocate(args: argparse.Namespace) -> int:
    if args.m_total < 2 * args.m_pilot:
        raise UsageError(
            f"--m-total ({args.m_total}) must be at least 2 * --m-pilot ({2 * args.m_pilot})"
        )
    agree = [0, 0]
    taken = [0, 0]
    stream, fmt = _open_input(args.pilot, args.input_format)
    with stream:
        for rec in iter_calibration(stream, fmt):
            side = rec.true_label
            if taken[side] < args.m_pilot:
                taken[side] += 1
                agree[side] += rec.judge_label == side
    if min(taken) < args.m_pilot:
        raise UsageError(
            f"pilot file has {taken[0]} true-0 and {taken[1]} true-1 records; "
            f"need {args.m_pilot} of each"
        )
    pilot = PilotResult.from_counts(args.m_pilot, agree[0], agree[1])
    plan = adaptive_allocate(pilot, args.p_hat, args.m_total)
    if args.format == "json":
        doc = {
            "m0": plan.m0,
            "m1": plan.m1,
            "m_total": plan.m_total,
            "provisional_m1": plan.provisional_m1,
            "clamped": plan.clamped,
            "kappa_hat": pilot.kappa_hat,
            "q0_tilde": pilot.q0_tilde,
            "q1_tilde": pilot.q1_tilde,
        }
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = (
            f"m0 = {plan.m0}, m1 = {plan.m1} (total {plan.m_total})\n"
            f"kappa_hat = {pilot.kappa_hat:.6g}, provisional m1 = {plan.provisional_m1}"
            f"{' (clamped)' if plan.clamped else ''}\n"
        )
    _emit(text, args.output)
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    op = OperatingPoint(args.q0, args.q1)
    m0, m1 = plan_calibration_size(args.target, args.p_hat, op, args.policy, args.alpha)
    if args.format == "json":
        text = json.dumps({"m0": m0, "m1": m1, "m_total": m0 + m1}, indent=2) + "\n"
    else:
        text = f"m0 = {m0}, m1 = {m1} (total {m0 + m1})\n"
    _emit(text, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="judgecal",
        description="Bias-corrected accuracy and confidence intervals for LLM judges.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("json", "csv", "text"), default="text"):
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--output", default=None, help="output file (default stdout)")

    p = sub.add_parser("report", help="estimate accuracy from judge and calibration labels")
    p.add_argument("--judgments", required=True, help="CSV/JSONL with id,judge_label")
    p.add_argument(
        "--calibration", required=True, help="CSV/JSONL with id,true_label,judge_label"
    )
    p.add_argument("--input-format", choices=("csv", "jsonl"), default=None)
    p.add_argument("--alpha", type=float, default=0.05)
    common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="Monte Carlo bias/coverage/length study")
    p.add_argument("--config", default=None, help="JSON file of simulation settings")
    p.add_argument("--theta-grid", dest="theta_grid", default=None,
                   help="comma-separated true accuracies (default 0, 0.05, ..., 1)")
    p.add_argument("--q0", type=float, default=None)
    p.add_argument("--q1", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m-total", dest="m_total", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--full", action="store_true",
                   help=f"use {FULL_REPS} replications per grid point")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--allocation", default=None,
                   choices=("symmetric", "adaptive", "oracle_ratio", "compare"))
    p.add_argument("--m-pilot", dest="m_pilot", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    common(p, formats=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("allocate", help="split a calibration budget using a pilot sample")
    p.add_argument("--pilot", required=True, help="CSV/JSONL pilot calibration records")
    p.add_argument("--input-format", choices=("csv", "jsonl"), default=None)
    p.add_argument("--p-hat", dest="p_hat", type=float, required=True)
    p.add_argument("--m-total", dest="m_total", type=int, required=True)
    p.add_argument("--m-pilot", dest="m_pilot", type=int, default=10)
    common(p, formats=("json", "text"))
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("plan", help="smallest calibration sizes for a target interval length")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--p-hat", dest="p_hat", type=float, required=True)
    p.add_argument("--q0", type=float, required=True)
    p.add_argument("--q1", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--policy", choices=("symmetric", "optimal"), default="symmetric")
    common(p, formats=("json", "text"))
    p.set_defaults(func=cmd_plan)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, which would collide with EXIT_NON_IDENTIFIABLE
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except NonIdentifiableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NON_IDENTIFIABLE
    except JudgeCalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
