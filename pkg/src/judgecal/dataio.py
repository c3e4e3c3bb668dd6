"""Reading judge labels and calibration labels, and writing evaluation reports.

Two input formats are accepted:

* CSV with a mandatory header row. Judgments need ``id,judge_label``;
  calibration records need ``id,true_label,judge_label``. Extra columns are
  ignored.
* JSONL with one object per line using the same field names.

Labels must be exactly ``0`` or ``1`` (the strings ``"0"``/``"1"`` or the
integers). Nothing else is coerced, so ``"true"``, ``1.0`` and ``" 1"`` are
all rejected.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Iterator, Literal, Optional, Union

from judgecal.errors import InputFormatError, InvariantViolation
from judgecal.estimator import confidence_interval, naive_estimate
from judgecal.types import CalibrationSummary, TestSummary

Format = Literal["csv", "jsonl"]

SCHEMA_VERSION = 1
METHOD_VERSION = "rogan-gladen+adjusted-wald/1"
THIN_SIDE_WARNING = 20

JUDGMENT_FIELDS = ("id", "judge_label")
CALIBRATION_FIELDS = ("id", "true_label", "judge_label")


@dataclass(frozen=True)
class JudgmentRecord:
    id: str
    judge_label: int


@dataclass(frozen=True)
class CalibrationRecord:
    id: str
    true_label: int
    judge_label: int


def detect_format(path: Union[str, Path]) -> Format:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    raise InputFormatError(f"cannot infer format from {str(path)!r}; use csv or jsonl")


def _text(source: IO) -> IO[str]:
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def _label(value, name: str, line: int) -> int:
    if isinstance(value, bool):
        raise InputFormatError(f"{name} must be 0 or 1, got {value!r}", line)
    if value in (0, 1) and isinstance(value, int):
        return value
    if value == "0":
        return 0
    if value == "1":
        return 1
    raise InputFormatError(f"{name} must be 0 or 1, got {value!r}", line)


def _ident(value, line: int) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise InputFormatError(f"id must be a string, got {value!r}", line)
    value = str(value)
    if not value:
        raise InputFormatError("empty id", line)
    return value


def _rows(source: IO, fmt: Format, fields: tuple[str, ...]) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, mapping)`` for each record, validating shape only."""
    text = _text(source)
    if fmt == "csv":
        reader = csv.reader(text)
        try:
            header = next(reader)
        except StopIteration:
            raise InputFormatError("missing CSV header", 1) from None
        missing = [f for f in fields if f not in header]
        if missing:
            raise InputFormatError(
                f"CSV header must contain {','.join(fields)}; missing {','.join(missing)}", 1
            )
        index = {f: header.index(f) for f in fields}
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise InputFormatError(
                    f"expected {len(header)} columns, got {len(row)}", line
                )
            yield line, {f: row[i] for f, i in index.items()}
    elif fmt == "jsonl":
        for line, raw in enumerate(text, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InputFormatError(f"invalid JSON: {exc.msg}", line) from None
            if not isinstance(obj, dict):
                raise InputFormatError("each line must be a JSON object", line)
            missing = [f for f in fields if f not in obj]
            if missing:
                raise InputFormatError(f"missing field(s) {','.join(missing)}", line)
            yield line, obj
    else:
        raise InputFormatError(f"unknown format {fmt!r}")


def iter_judgments(source: IO, fmt: Format) -> Iterator[JudgmentRecord]:
    seen: set[str] = set()
    for line, row in _rows(source, fmt, JUDGMENT_FIELDS):
        ident = _ident(row["id"], line)
        if ident in seen:
            raise InputFormatError(f"duplicate id {ident!r}", line)
        seen.add(ident)
        yield JudgmentRecord(ident, _label(row["judge_label"], "judge_label", line))


def iter_calibration(source: IO, fmt: Format) -> Iterator[CalibrationRecord]:
    seen: set[str] = set()
    for line, row in _rows(source, fmt, CALIBRATION_FIELDS):
        ident = _ident(row["id"], line)
        if ident in seen:
            raise InputFormatError(f"duplicate id {ident!r}", line)
        seen.add(ident)
        yield CalibrationRecord(
            ident,
            _label(row["true_label"], "true_label", line),
            _label(row["judge_label"], "judge_label", line),
        )


def ingest_judgments(source: IO, fmt: Format) -> TestSummary:
    """Count judge labels from a stream of judgment records."""
    n = positive = 0
    for rec in iter_judgments(source, fmt):
        n += 1
        positive += rec.judge_label
    return TestSummary(n=n, judged_correct=positive)


def ingest_calibration(source: IO, fmt: Format) -> CalibrationSummary:
    """Count per-class sizes and judge agreements from calibration records."""
    counts = [[0, 0], [0, 0]]  # [true_label][judge_label]
    for rec in iter_calibration(source, fmt):
        counts[rec.true_label][rec.judge_label] += 1
    return CalibrationSummary(
        m0=counts[0][0] + counts[0][1],
        m1=counts[1][0] + counts[1][1],
        agree0=counts[0][0],
        agree1=counts[1][1],
    )


@dataclass(frozen=True)
class EvaluationReport:
    n: int
    p_hat: float
    m0: int
    m1: int
    q0_hat: Optional[float]
    q1_hat: Optional[float]
    theta_hat: Optional[float]
    ci_lower: float
    ci_upper: float
    alpha: float
    method_version: str = METHOD_VERSION
    warnings: tuple[str, ...] = field(default_factory=tuple)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["warnings"] = list(self.warnings)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        doc = json.loads(text)
        doc["warnings"] = tuple(doc.get("warnings", ()))
        return cls(**doc)

    def to_csv(self) -> str:
        doc = self.to_dict()
        doc["warnings"] = ";".join(self.warnings)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(doc.keys())
        writer.writerow("" if v is None else (repr(v) if isinstance(v, float) else v)
                        for v in doc.values())
        return buf.getvalue()

    def to_text(self) -> str:
        level = _percent(1.0 - self.alpha)
        point = "n/a" if self.theta_hat is None else f"{self.theta_hat:.4f}"
        lines = [
            f"θ̂ = {point}, {level} CI [{self.ci_lower:.4f}, {self.ci_upper:.4f}]",
            f"naive p̂ = {self.p_hat:.4f} (n = {self.n})",
            f"calibration: m0 = {self.m0}, m1 = {self.m1}, "
            f"q0_hat = {_fmt(self.q0_hat)}, q1_hat = {_fmt(self.q1_hat)}",
        ]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"


def _percent(level: float) -> str:
    return f"{level * 100:.6g}%"


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def build_report(
    test: TestSummary, cal: CalibrationSummary, alpha: float = 0.05
) -> EvaluationReport:
    """Estimate accuracy and its interval, attaching warnings for thin data.

    Raises:
        EmptyTestSetError: if the test set has no records.
        NonIdentifiableError: if the judge is no better than chance.
        InvariantViolation: if the computed interval is inconsistent.
    """
    p_hat = naive_estimate(test)
    est = confidence_interval(test, cal, alpha)
    warnings = []
    for side, m in (("m0", cal.m0), ("m1", cal.m1)):
        if m == 0:
            warnings.append(
                f"{side} = 0: no calibration items on this side; point estimate omitted"
            )
        elif m < THIN_SIDE_WARNING:
            warnings.append(
                f"{side} = {m} < {THIN_SIDE_WARNING}: interval relies on smoothing "
                "and large-sample approximations"
            )
    if not (0.0 <= est.lower <= est.upper <= 1.0) or any(
        math.isnan(v) for v in (est.lower, est.upper)
    ):
        raise InvariantViolation(f"bad interval [{est.lower}, {est.upper}]")
    if est.theta_hat is not None and not 0.0 <= est.theta_hat <= 1.0:
        raise InvariantViolation(f"point estimate {est.theta_hat} outside [0, 1]")
    return EvaluationReport(
        n=test.n,
        p_hat=p_hat,
        m0=cal.m0,
        m1=cal.m1,
        q0_hat=cal.q0_hat if cal.m0 else None,
        q1_hat=cal.q1_hat if cal.m1 else None,
        theta_hat=est.theta_hat,
        ci_lower=est.lower,
        ci_upper=est.upper,
        alpha=alpha,
        warnings=tuple(warnings),
    )
