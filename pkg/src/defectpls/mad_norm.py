"""Benchmark-based metric normalization via median absolute deviation.

Thresholds are derived per metric from a benchmark corpus: the threshold is
the smallest benchmark value lying at least ``k * MAD`` from the median
(the largest value when none does), with an all-but-one-zero retry when the
median and MAD both vanish. Raw metric values then map to ``min(1, m / T)``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import MetricDataset
from .errors import (
    ConfigurationError,
    DegenerateSampleWarning,
    InvalidInputError,
    ParseError,
)


@dataclass(frozen=True)
class MadParams:
    """Scale factor applied to the MAD when deriving thresholds."""

    k: float = 3.0

    def __post_init__(self):
        if not self.k > 0:
            raise InvalidInputError(f"scale factor k must be positive, got {self.k}")


@dataclass(frozen=True)
class ThresholdTable:
    """Per-metric normalization thresholds.

    ``degenerate`` names the metrics whose benchmark sample was all zeros
    and therefore received the fallback threshold 1.
    """

    entries: dict[str, float]
    degenerate: frozenset[str] = frozenset()

    def __post_init__(self):
        for name, value in self.entries.items():
            if not (np.isfinite(value) and value > 0):
                raise InvalidInputError(
                    f"threshold for {name!r} must be a positive real, got {value!r}"
                )

    def __getitem__(self, name: str) -> float:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries


def mad(sample) -> float:
    """Median absolute deviation from the sample median.

    Even-length medians are the mean of the two central order statistics.
    """
    values = np.asarray(sample, dtype=float)
    if values.size == 0:
        raise InvalidInputError("MAD of an empty sample is undefined")
    if not np.isfinite(values).all():
        raise InvalidInputError("sample must be finite")
    center = np.median(values)
    return float(np.median(np.abs(values - center)))


def mad_threshold(sample, params: MadParams = MadParams()) -> float:
    """Normalization threshold of a benchmark sample.

    Computes ``med`` and ``sigma = k * MAD``. When both are zero the zeros
    are stripped down to a single one and the computation recurses; an
    all-zero sample falls back to 1 and emits :class:`DegenerateSampleWarning`.
    Otherwise the threshold is the smallest value whose absolute deviation
    from ``med`` is at least ``sigma`` (note: non-strict, so ``sigma = 0``
    selects the minimum), or the largest value when none qualifies.
    """
    values = np.asarray(sample, dtype=float)
    if values.size == 0:
        raise InvalidInputError("cannot derive a threshold from an empty sample")
    if not np.isfinite(values).all():
        raise InvalidInputError("sample must be finite")
    if (values < 0).any():
        raise InvalidInputError("metric values must be non-negative")

    while True:
        med = float(np.median(values))
        sigma = params.k * mad(values)
        if med == 0.0 and sigma == 0.0:
            nonzero = values[values != 0.0]
            if nonzero.size == 0:
                warnings.warn(
                    "all-zero benchmark sample, falling back to threshold 1",
                    DegenerateSampleWarning,
                    stacklevel=2,
                )
                return 1.0
            # keep exactly one zero, then retry
            values = np.concatenate(([0.0], nonzero))
            continue
        deviations = np.abs(values - med)
        qualifying = values[deviations >= sigma]
        threshold = float(qualifying.min()) if qualifying.size else float(values.max())
        if threshold == 0.0:
            # a zero far below the median (in MAD units) can win the
            # smallest-qualifying rule; a zero threshold cannot normalize,
            # so fall back like the degenerate case
            warnings.warn(
                "selection rule picked a zero value, falling back to threshold 1",
                DegenerateSampleWarning,
                stacklevel=2,
            )
            return 1.0
        return threshold


def build_threshold_table(
    benchmark: MetricDataset, params: MadParams = MadParams()
) -> ThresholdTable:
    """Derive one threshold per benchmark metric column."""
    entries: dict[str, float] = {}
    degenerate: set[str] = set()
    for j, name in enumerate(benchmark.names):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegenerateSampleWarning)
            entries[name] = mad_threshold(benchmark.X[:, j], params)
        if any(issubclass(w.category, DegenerateSampleWarning) for w in caught):
            degenerate.add(name)
            warnings.warn(
                f"benchmark column {name!r} is all zeros; threshold set to 1",
                DegenerateSampleWarning,
                stacklevel=2,
            )
    return ThresholdTable(entries=entries, degenerate=frozenset(degenerate))


def normalize(dataset: MetricDataset, table: ThresholdTable) -> MetricDataset:
    """Map every metric cell to ``min(1, value / threshold)``.

    Bug counts and row identifiers pass through unchanged.
    """
    missing = [name for name in dataset.names if name not in table]
    if missing:
        raise ConfigurationError(
            "no threshold for column(s): " + ", ".join(missing)
        )
    thresholds = np.array([table[name] for name in dataset.names])
    return MetricDataset(
        names=dataset.names,
        X=np.minimum(1.0, dataset.X / thresholds),
        bug_counts=dataset.bug_counts,
        row_ids=dataset.row_ids,
    )


def save_thresholds(table: ThresholdTable, path: str | Path) -> None:
    """Write a threshold table as ``metric,threshold`` lines with a header.

    Values are written in shortest round-trip decimal form, so reading the
    file back reproduces each threshold bit-exactly.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "threshold"])
        for name in table.entries:
            writer.writerow([name, repr(table.entries[name])])


def load_thresholds(path: str | Path) -> ThresholdTable:
    """Parse a threshold file written by :func:`save_thresholds`."""
    path = Path(path)
    entries: dict[str, float] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty threshold file") from None
        if [h.strip() for h in header] != ["metric", "threshold"]:
            raise ParseError(
                f"{path}: expected header 'metric,threshold', got {header!r}"
            )
        for line_no, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != 2:
                raise ParseError(
                    f"{path}: line {line_no}: expected 2 cells, got {len(record)}"
                )
            name = record[0].strip()
            if name in entries:
                raise ParseError(f"{path}: line {line_no}: duplicate metric {name!r}")
            try:
                entries[name] = float(record[1])
            except ValueError:
                raise ParseError(
                    f"{path}: line {line_no}: not a number: {record[1]!r}"
                ) from None
    if not entries:
        raise ParseError(f"{path}: no thresholds")
    return ThresholdTable(entries=entries)
