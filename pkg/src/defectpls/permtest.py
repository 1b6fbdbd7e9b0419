"""Classification permutation (randomization) test.

The observed statistic comes from one unpermuted split/train/eval pass.
Each replicate permutes the bug counts (and hence the labels) against the
fixed feature rows, reruns the identical pipeline, and records the
test-set statistic; the p-value uses the add-one convention
``(1 + #{null >= observed}) / (R + 1)`` so it can never be zero.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dataset import MetricDataset
from .errors import InvalidSpecError, RepetitionError
from .metrics_eval import EvalReport
from .pls_core import FitOptions
from .plsda import train_da
from .sampling import SplitSpec, derive_seed, split, train_and_evaluate

STATISTICS = ("F1p", "F1n")
_STAT_FIELD = {"F1p": "f1p", "F1n": "f1n"}


@dataclass(frozen=True)
class PermTestSpec:
    permutations: int = 1000
    seed: int = 0
    statistic: str = "F1p"  # F1p | F1n | both
    freeze_split: bool = False

    def __post_init__(self):
        if self.permutations < 1:
            raise InvalidSpecError(
                f"permutations must be >= 1, got {self.permutations}"
            )
        if self.statistic not in STATISTICS + ("both",):
            raise InvalidSpecError(
                f"unknown statistic {self.statistic!r}; expected F1p, F1n or both"
            )

    @property
    def statistic_names(self) -> tuple[str, ...]:
        return STATISTICS if self.statistic == "both" else (self.statistic,)


@dataclass(frozen=True)
class PermTestResult:
    statistics: tuple[str, ...]
    observed: dict[str, float]
    null_values: dict[str, np.ndarray]
    p_values: dict[str, float]


def _statistic_values(report: EvalReport, names) -> dict[str, float]:
    # a degenerate F1 (no predictions of that class) scores as 0
    out = {}
    for name in names:
        value = getattr(report, _STAT_FIELD[name])
        out[name] = 0.0 if math.isnan(value) else float(value)
    return out


def permutation_test(
    dataset: MetricDataset,
    split_spec: SplitSpec,
    fit_opts: FitOptions,
    spec: PermTestSpec,
    cutoff: float = 0.0,
    selection_metric: str = "F1p",
    jobs: int = 1,
) -> PermTestResult:
    """Null distribution of the classification statistic under label
    permutation.

    Every replicate re-splits with a freshly derived seed unless
    ``spec.freeze_split`` pins the observed run's split.
    """
    names = spec.statistic_names

    def trainer(train, valid):
        return train_da(
            train, valid, fit_opts, cutoff=cutoff, selection_metric=selection_metric
        )

    def run_pipeline(data: MetricDataset, split_seed: int) -> dict[str, float]:
        part = split(data, replace(split_spec, seed=split_seed))
        _, report = train_and_evaluate(data, part, trainer)
        return _statistic_values(report, names)

    observed = run_pipeline(dataset, split_spec.seed)

    def one_replicate(r: int) -> dict[str, float]:
        try:
            run_seed = derive_seed(spec.seed, r)
            rng = np.random.default_rng(derive_seed(run_seed, 0))
            perm = rng.permutation(dataset.n_rows)
            permuted = MetricDataset(
                names=dataset.names,
                X=dataset.X,
                bug_counts=dataset.bug_counts[perm],
                row_ids=dataset.row_ids,
            )
            split_seed = (
                split_spec.seed if spec.freeze_split else derive_seed(run_seed, 1)
            )
            return run_pipeline(permuted, split_seed)
        except Exception as exc:
            raise RepetitionError(f"permutation {r} failed: {exc}") from exc

    indices = range(spec.permutations)
    if jobs <= 1 or spec.permutations <= 1:
        replicates = [one_replicate(r) for r in indices]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            replicates = list(pool.map(one_replicate, indices))

    null_values = {
        name: np.array([rep[name] for rep in replicates]) for name in names
    }
    p_values = {
        name: float(
            (1 + np.sum(null_values[name] >= observed[name]))
            / (spec.permutations + 1)
        )
        for name in names
    }
    return PermTestResult(
        statistics=names,
        observed=observed,
        null_values=null_values,
        p_values=p_values,
    )


@dataclass(frozen=True)
class Histogram:
    statistic: str
    edges: np.ndarray  # length bins + 1
    counts: np.ndarray  # length bins
    observed: float


def null_histogram(
    result: PermTestResult, bins: int, statistic: str | None = None
) -> Histogram:
    """Bin the null values over [min, max] with right-closed bins (the
    first bin also includes its left edge), plus the observed value as a
    marker for plotting. Counts always sum to the replicate count."""
    if bins < 1:
        raise InvalidSpecError(f"bins must be >= 1, got {bins}")
    if statistic is None:
        statistic = result.statistics[0]
    if statistic not in result.statistics:
        raise InvalidSpecError(
            f"statistic {statistic!r} not in result ({result.statistics})"
        )
    values = result.null_values[statistic]
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    # convex combination keeps interior edges exact for simple decimal
    # spans (e.g. the midpoint of [0.1, 0.3] is the double nearest 0.2)
    i = np.arange(bins + 1)
    edges = (lo * (bins - i) + hi * i) / bins
    edges[0], edges[-1] = lo, hi
    # right-closed bins: index by the first edge >= value, clamped at the ends
    idx = np.searchsorted(edges, values, side="left") - 1
    idx = np.clip(idx, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return Histogram(
        statistic=statistic,
        edges=edges,
        counts=counts,
        observed=result.observed[statistic],
    )
