"""Confusion matrix, the seven derived classification measures, and
bug-mass completeness, plus mean/SD aggregation across runs.

Counts are kept as reals so cross-run averaged matrices can be fed back in
unchanged. A measure with a zero denominator is reported as NaN and its
name recorded in the report's ``degenerate`` set; aggregation skips flagged
values and counts them instead.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, InvalidInputError

MEASURE_FIELDS = (
    "precision_p",
    "recall_p",
    "f1p",
    "precision_n",
    "recall_n",
    "f1n",
    "mcc",
    "completeness",
)
COUNT_FIELDS = ("tp", "tn", "fp", "fn")
# column order used by the plain-text table and CSV reports
TABLE_COLUMNS = MEASURE_FIELDS + COUNT_FIELDS
TABLE_HEADERS = {
    "precision_p": "Precision_p",
    "recall_p": "Recall_p",
    "f1p": "F1p",
    "precision_n": "Precision_n",
    "recall_n": "Recall_n",
    "f1n": "F1n",
    "mcc": "MCC",
    "completeness": "Compl.",
    "tp": "TP",
    "tn": "TN",
    "fp": "FP",
    "fn": "FN",
}


@dataclass(frozen=True)
class ConfusionCounts:
    """Real-valued confusion matrix entries (reals so that averaged
    matrices are representable)."""

    tp: float
    fp: float
    tn: float
    fn: float

    def __post_init__(self):
        for name in COUNT_FIELDS:
            if getattr(self, name) < 0:
                raise InvalidInputError(f"count {name} must be non-negative")
        if self.total == 0:
            raise InvalidInputError("confusion counts must not all be zero")

    @property
    def total(self) -> float:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class EvalReport:
    counts: ConfusionCounts
    precision_p: float
    recall_p: float
    f1p: float
    precision_n: float
    recall_n: float
    f1n: float
    mcc: float
    completeness: float
    degenerate: frozenset[str] = frozenset()

    def value(self, name: str) -> float:
        """Measure or count by field name (counts come from ``counts``)."""
        if name in COUNT_FIELDS:
            return getattr(self.counts, name)
        return getattr(self, name)


def _check_labels(labels, what: str) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{what} must be a non-empty 1-d label array")
    if not np.isin(arr, (-1, 1)).all():
        raise InvalidInputError(f"{what} must contain only +1/-1 labels")
    return arr.astype(int)


def confusion(actual, predicted) -> ConfusionCounts:
    """Count agreements and disagreements of two +1/-1 label vectors."""
    a = _check_labels(actual, "actual")
    p = _check_labels(predicted, "predicted")
    if a.shape != p.shape:
        raise DimensionMismatchError(
            f"{a.size} actual labels vs {p.size} predictions"
        )
    pos_a = a == 1
    pos_p = p == 1
    return ConfusionCounts(
        tp=float(np.sum(pos_a & pos_p)),
        fp=float(np.sum(~pos_a & pos_p)),
        tn=float(np.sum(~pos_a & ~pos_p)),
        fn=float(np.sum(pos_a & ~pos_p)),
    )


def _ratio(num: float, den: float, name: str, degenerate: set[str]) -> float:
    if den == 0:
        degenerate.add(name)
        return math.nan
    return num / den


def measures(counts: ConfusionCounts) -> EvalReport:
    """Precision/recall/F1 for both classes plus MCC from the confusion
    counts. Completeness is not derivable from counts and stays flagged
    until supplied (see :func:`evaluate`)."""
    degenerate: set[str] = set()
    tp, fp, tn, fn = counts.tp, counts.fp, counts.tn, counts.fn

    precision_p = _ratio(tp, tp + fp, "precision_p", degenerate)
    recall_p = _ratio(tp, tp + fn, "recall_p", degenerate)
    precision_n = _ratio(tn, tn + fn, "precision_n", degenerate)
    recall_n = _ratio(tn, tn + fp, "recall_n", degenerate)

    def f1(precision, recall, name):
        if math.isnan(precision) or math.isnan(recall):
            degenerate.add(name)
            return math.nan
        return _ratio(2 * precision * recall, precision + recall, name, degenerate)

    f1p = f1(precision_p, recall_p, "f1p")
    f1n = f1(precision_n, recall_n, "f1n")

    mcc_den = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = _ratio(tp * tn - fp * fn, mcc_den, "mcc", degenerate)

    degenerate.add("completeness")
    return EvalReport(
        counts=counts,
        precision_p=precision_p,
        recall_p=recall_p,
        f1p=f1p,
        precision_n=precision_n,
        recall_n=recall_n,
        f1n=f1n,
        mcc=mcc,
        completeness=math.nan,
        degenerate=frozenset(degenerate),
    )


def completeness(bug_counts, predicted) -> float:
    """Fraction of all recorded bugs residing in rows predicted bugged.

    Rows predicted bugged with zero bugs contribute nothing, so this equals
    the true-positive bug mass over the total. NaN when no bugs exist.
    """
    counts = np.asarray(bug_counts)
    p = _check_labels(predicted, "predicted")
    if counts.shape != p.shape:
        raise DimensionMismatchError(
            f"{counts.size} bug counts vs {p.size} predictions"
        )
    if (counts < 0).any():
        raise InvalidInputError("bug counts must be non-negative")
    total = counts.sum()
    if total == 0:
        return math.nan
    return float(counts[p == 1].sum() / total)


def evaluate(actual, predicted, bug_counts=None) -> EvalReport:
    """Full report for one run: confusion, the seven measures, and (when
    bug counts are given and non-zero in total) completeness."""
    report = measures(confusion(actual, predicted))
    if bug_counts is None:
        return report
    value = completeness(bug_counts, predicted)
    if math.isnan(value):
        return report
    return replace(
        report,
        completeness=value,
        degenerate=report.degenerate - {"completeness"},
    )


@dataclass(frozen=True)
class MeasureStats:
    mean: float
    sd: float
    n_used: int
    n_degenerate: int


@dataclass(frozen=True)
class AggregateReport:
    """Per-measure arithmetic mean and population SD across runs."""

    stats: dict[str, MeasureStats]
    n_reports: int


def aggregate(reports: Sequence[EvalReport]) -> AggregateReport:
    """Mean and population SD per measure and count field; degenerate
    values are excluded and counted."""
    if not reports:
        raise InvalidInputError("cannot aggregate zero reports")
    stats: dict[str, MeasureStats] = {}
    for name in TABLE_COLUMNS:
        values = [
            r.value(name) for r in reports if name not in r.degenerate
        ]
        n_deg = len(reports) - len(values)
        if values:
            arr = np.asarray(values, dtype=float)
            stats[name] = MeasureStats(
                mean=float(arr.mean()),
                sd=float(arr.std()),
                n_used=len(values),
                n_degenerate=n_deg,
            )
        else:
            stats[name] = MeasureStats(
                mean=math.nan, sd=math.nan, n_used=0, n_degenerate=n_deg
            )
    return AggregateReport(stats=stats, n_reports=len(reports))


def write_reports_csv(reports: Iterable[EvalReport], path: str | Path) -> None:
    """One row per report; numbers in shortest round-trip decimal form."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("run",) + TABLE_COLUMNS + ("degenerate",))
        for i, report in enumerate(reports):
            row = [str(i)]
            row.extend(repr(report.value(name)) for name in TABLE_COLUMNS)
            row.append(";".join(sorted(report.degenerate)))
            writer.writerow(row)


def read_reports_csv(path: str | Path) -> list[EvalReport]:
    """Parse a file written by :func:`write_reports_csv` losslessly."""
    path = Path(path)
    reports: list[EvalReport] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = ["run", *TABLE_COLUMNS, "degenerate"]
        if header != expected:
            raise InvalidInputError(f"unexpected report header: {header!r}")
        for record in reader:
            values = {
                name: float(cell)
                for name, cell in zip(TABLE_COLUMNS, record[1:-1])
            }
            counts = ConfusionCounts(
                tp=values["tp"], fp=values["fp"], tn=values["tn"], fn=values["fn"]
            )
            degenerate = frozenset(
                part for part in record[-1].split(";") if part
            )
            reports.append(
                EvalReport(
                    counts=counts,
                    degenerate=degenerate,
                    **{name: values[name] for name in MEASURE_FIELDS},
                )
            )
    return reports


def format_table(agg: AggregateReport) -> str:
    """Aligned two-row summary (mean, Std.Dev.) in the report column order."""
    width = 12
    label_width = 10
    lines = [
        " " * label_width
        + "".join(f"{TABLE_HEADERS[c]:>{width}}" for c in TABLE_COLUMNS)
    ]
    for label, attr in (("mean", "mean"), ("Std.Dev.", "sd")):
        cells = [f"{label:<{label_width}}"]
        for c in TABLE_COLUMNS:
            value = getattr(agg.stats[c], attr)
            if math.isnan(value):
                cells.append(f"{'n/a':>{width}}")
            elif c in COUNT_FIELDS:
                cells.append(f"{value:>{width}.1f}")
            else:
                cells.append(f"{value:>{width}.3f}")
        lines.append("".join(cells))
    return "\n".join(lines)
