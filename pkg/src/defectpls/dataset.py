"""Metric dataset container and CSV ingestion.

A dataset is a row-major matrix of non-negative metric values, one row per
code element (e.g. a Java class), plus an optional per-row bug count and an
optional opaque row identifier. Bug counts induce the two-class labels used
throughout: +1 for rows with at least one bug, -1 otherwise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    InvalidInputError,
    ParseError,
)


@dataclass(frozen=True)
class MetricDataset:
    """Immutable matrix of metric values with optional bug counts and ids.

    Attributes
    ----------
    names : tuple of str
        Metric column names, in matrix column order.
    X : ndarray, shape (n, m)
        Metric values; finite and non-negative.
    bug_counts : ndarray of int, shape (n,), optional
        Number of recorded bugs per row.
    row_ids : tuple of str, optional
        Opaque identifiers passed through untouched.
    """

    names: tuple[str, ...]
    X: np.ndarray
    bug_counts: np.ndarray | None = None
    row_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise InvalidInputError("metric matrix must be 2-dimensional")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInputError("metric matrix must be non-empty")
        if len(self.names) != X.shape[1]:
            raise DimensionMismatchError(
                f"{len(self.names)} column names for {X.shape[1]} columns"
            )
        if len(set(self.names)) != len(self.names):
            raise InvalidInputError("metric names must be unique")
        if not np.isfinite(X).all():
            raise InvalidInputError("metric values must be finite")
        if (X < 0).any():
            raise InvalidInputError("metric values must be non-negative")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.bug_counts is not None:
            counts = np.asarray(self.bug_counts, dtype=int)
            if counts.shape != (X.shape[0],):
                raise DimensionMismatchError(
                    f"{counts.size} bug counts for {X.shape[0]} rows"
                )
            if (counts < 0).any():
                raise InvalidInputError("bug counts must be non-negative")
            counts.setflags(write=False)
            object.__setattr__(self, "bug_counts", counts)
        if self.row_ids is not None and len(self.row_ids) != X.shape[0]:
            raise DimensionMismatchError(
                f"{len(self.row_ids)} row ids for {X.shape[0]} rows"
            )

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_metrics(self) -> int:
        return self.X.shape[1]

    @property
    def labels(self) -> np.ndarray:
        """Two-class labels (+1 bugged, -1 non-bugged) derived from counts."""
        if self.bug_counts is None:
            raise InvalidInputError("dataset has no bug counts to label")
        return np.where(self.bug_counts >= 1, 1, -1)

    def take(self, indices: Sequence[int] | np.ndarray) -> "MetricDataset":
        """Row subset (with repetition allowed) as a new dataset."""
        idx = np.asarray(indices, dtype=int)
        return MetricDataset(
            names=self.names,
            X=self.X[idx],
            bug_counts=None if self.bug_counts is None else self.bug_counts[idx],
            row_ids=None
            if self.row_ids is None
            else tuple(self.row_ids[i] for i in idx),
        )


def _parse_cell(text: str, line_no: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(
            f"line {line_no}, column {column!r}: not a number: {text!r}"
        ) from None


def load_dataset(
    path: str | Path,
    keep_columns: Sequence[str] | None = None,
    bug_column: str | None = "bugs",
    id_column: str | None = "id",
) -> MetricDataset:
    """Read a dataset CSV (comma separated, first row header, UTF-8).

    Parameters
    ----------
    keep_columns : sequence of str, optional
        Ordered metric columns to retain. Defaults to every header column
        except the bug and identifier columns.
    bug_column : str, optional
        Name of the bug-count column. Loaded when present in the header; a
        non-None value that is absent is only an error if explicitly needed
        by the caller.
    id_column : str, optional
        Name of the identifier column, passed through untouched.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        col_index = {name: i for i, name in enumerate(header)}
        if len(col_index) != len(header):
            raise ParseError(f"{path}: duplicate column names in header")

        has_bugs = bug_column is not None and bug_column in col_index
        has_ids = id_column is not None and id_column in col_index
        if keep_columns is None:
            keep = [
                h
                for h in header
                if h != bug_column and h != id_column
            ]
        else:
            keep = list(keep_columns)
            missing = [c for c in keep if c not in col_index]
            if missing:
                raise ConfigurationError(
                    f"{path}: dataset header is missing column(s): "
                    + ", ".join(missing)
                )
        if not keep:
            raise ConfigurationError(f"{path}: no metric columns to load")

        keep_idx = [col_index[c] for c in keep]
        bug_idx = col_index[bug_column] if has_bugs else None
        id_idx = col_index[id_column] if has_ids else None

        rows: list[list[float]] = []
        bugs: list[int] = []
        ids: list[str] = []
        for line_no, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise ParseError(
                    f"{path}: line {line_no}: expected {len(header)} cells, "
                    f"got {len(record)}"
                )
            rows.append(
                [_parse_cell(record[i], line_no, header[i]) for i in keep_idx]
            )
            if bug_idx is not None:
                raw = _parse_cell(record[bug_idx], line_no, bug_column)
                if raw < 0 or raw != int(raw):
                    raise ParseError(
                        f"{path}: line {line_no}, column {bug_column!r}: "
                        f"bug count must be a non-negative integer, got {raw!r}"
                    )
                bugs.append(int(raw))
            if id_idx is not None:
                ids.append(record[id_idx])

    if not rows:
        raise ParseError(f"{path}: no data rows")
    return MetricDataset(
        names=tuple(keep),
        X=np.array(rows, dtype=float),
        bug_counts=np.array(bugs, dtype=int) if bugs else None,
        row_ids=tuple(ids) if ids else None,
    )


def save_dataset(dataset: MetricDataset, path: str | Path) -> None:
    """Write a dataset back to CSV in the dialect :func:`load_dataset` reads."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header: list[str] = []
        if dataset.row_ids is not None:
            header.append("id")
        header.extend(dataset.names)
        if dataset.bug_counts is not None:
            header.append("bugs")
        writer.writerow(header)
        for i in range(dataset.n_rows):
            row: list[str] = []
            if dataset.row_ids is not None:
                row.append(dataset.row_ids[i])
            row.extend(repr(v) for v in dataset.X[i].tolist())
            if dataset.bug_counts is not None:
                row.append(str(int(dataset.bug_counts[i])))
            writer.writerow(row)
