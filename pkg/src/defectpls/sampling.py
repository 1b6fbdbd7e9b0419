"""Deterministic data partitioning and class rebalancing.

All randomness flows from explicit 64-bit seeds; repetition r of any
resampling loop uses a child seed obtained by XOR-folding the parent seed
with the repetition index through the splitmix64 finalizer, so repetitions
are independent and may run in parallel without changing results.

The 80/10/10 split keeps the original bugged/non-bugged ratio in the test
set (and, stratified, in the other two splits); repeated random re-splits
of this kind are what the evaluation protocol calls bootstrap repetitions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Protocol, Sequence

import numpy as np

from .dataset import MetricDataset
from .errors import (
    DegenerateClassError,
    InvalidSpecError,
    RepetitionError,
)
from .metrics_eval import AggregateReport, EvalReport, aggregate, evaluate
from .plsda import BUGGED, NON_BUGGED

_MASK64 = (1 << 64) - 1


def _mix64(z: int) -> int:
    """splitmix64 finalizer; bijective on 64-bit integers."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(seed: int, index: int) -> int:
    """Child seed for repetition ``index``, stable across platforms."""
    return _mix64((seed & _MASK64) ^ _mix64(index & _MASK64))


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


class Classifier(Protocol):
    def classify(self, X: np.ndarray) -> np.ndarray: ...


# second argument is the validation split (None when a fold's remainder is
# too small to carve one)
Trainer = Callable[[MetricDataset, "MetricDataset | None"], Classifier]


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.8
    valid_frac: float = 0.1
    test_frac: float = 0.1
    seed: int = 0
    preserve_test_ratio: bool = True

    def __post_init__(self):
        fracs = (self.train_frac, self.valid_frac, self.test_frac)
        if any(f <= 0 for f in fracs):
            raise InvalidSpecError(f"split fractions must be positive: {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise InvalidSpecError(f"split fractions must sum to 1: {fracs}")


@dataclass(frozen=True)
class Partition:
    train_idx: np.ndarray
    valid_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        parts = {}
        for name in ("train_idx", "valid_idx", "test_idx"):
            arr = np.asarray(getattr(self, name), dtype=int)
            if arr.size == 0:
                raise InvalidSpecError(f"{name} is empty")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            parts[name] = arr
        combined = np.concatenate(list(parts.values()))
        if np.unique(combined).size != combined.size:
            raise InvalidSpecError("partition indices overlap")

    @property
    def n_rows(self) -> int:
        return self.train_idx.size + self.valid_idx.size + self.test_idx.size


@dataclass(frozen=True)
class ResampleSpec:
    kind: str = "none"  # none | upsample_50
    repetitions: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "upsample_50"):
            raise InvalidSpecError(f"unknown resample kind {self.kind!r}")
        if self.repetitions < 1:
            raise InvalidSpecError(
                f"repetitions must be >= 1, got {self.repetitions}"
            )


def _class_indices(dataset: MetricDataset) -> tuple[np.ndarray, np.ndarray]:
    labels = dataset.labels
    pos = np.flatnonzero(labels == BUGGED)
    neg = np.flatnonzero(labels == NON_BUGGED)
    if pos.size == 0 or neg.size == 0:
        raise DegenerateClassError("dataset contains rows of only one class")
    return pos, neg


def _allocate(size: int, share: float, available: int, other_available: int) -> int:
    """Class share of a split of the given size, nearest-rounded and clamped
    so both classes stay feasible."""
    want = _round_half_up(size * share)
    return min(max(want, size - other_available), min(size, available))


def split(dataset: MetricDataset, spec: SplitSpec) -> Partition:
    """Three-way split by the spec's fractions, deterministic given the seed.

    With ``preserve_test_ratio`` the positive-class count of every split
    follows the global class ratio as closely as integer rounding allows
    (the test-set guarantee; train/valid are stratified the same way).
    """
    n = dataset.n_rows
    if n < 10:
        raise InvalidSpecError(f"need at least 10 rows to split, got {n}")
    pos, neg = _class_indices(dataset)

    test_size = _round_half_up(spec.test_frac * n)
    valid_size = _round_half_up(spec.valid_frac * n)
    train_size = n - test_size - valid_size
    if min(test_size, valid_size, train_size) < 1:
        raise InvalidSpecError(
            f"fractions {spec.train_frac}/{spec.valid_frac}/{spec.test_frac} "
            f"leave an empty split for {n} rows"
        )

    rng = np.random.default_rng(spec.seed)
    if not spec.preserve_test_ratio:
        perm = rng.permutation(n)
        return Partition(
            test_idx=perm[:test_size],
            valid_idx=perm[test_size : test_size + valid_size],
            train_idx=perm[test_size + valid_size :],
        )

    pos_perm = rng.permutation(pos)
    neg_perm = rng.permutation(neg)
    n_pos, n_neg = pos_perm.size, neg_perm.size

    test_pos = _allocate(test_size, n_pos / n, n_pos, n_neg)
    test_neg = test_size - test_pos
    rem_pos, rem_neg = n_pos - test_pos, n_neg - test_neg
    valid_pos = _allocate(
        valid_size, rem_pos / (rem_pos + rem_neg), rem_pos, rem_neg
    )
    valid_neg = valid_size - valid_pos

    test_idx = np.concatenate((pos_perm[:test_pos], neg_perm[:test_neg]))
    valid_idx = np.concatenate(
        (
            pos_perm[test_pos : test_pos + valid_pos],
            neg_perm[test_neg : test_neg + valid_neg],
        )
    )
    train_idx = np.concatenate(
        (pos_perm[test_pos + valid_pos :], neg_perm[test_neg + valid_neg :])
    )
    return Partition(train_idx=train_idx, valid_idx=valid_idx, test_idx=test_idx)


def upsample_50(train: MetricDataset, seed: int) -> MetricDataset:
    """Duplicate minority-class rows uniformly at random (with replacement)
    until the classes are balanced; majority rows are untouched and every
    original row stays present."""
    labels = train.labels
    pos = np.flatnonzero(labels == BUGGED)
    neg = np.flatnonzero(labels == NON_BUGGED)
    if pos.size == 0 or neg.size == 0:
        raise DegenerateClassError("cannot up-sample a single-class split")
    if pos.size == neg.size:
        return train
    minority = pos if pos.size < neg.size else neg
    deficit = abs(pos.size - neg.size)
    rng = np.random.default_rng(seed)
    extra = rng.choice(minority, size=deficit, replace=True)
    return train.take(np.concatenate((np.arange(train.n_rows), extra)))


@dataclass(frozen=True)
class BootstrapResult:
    reports: list[EvalReport]
    summary: AggregateReport


def _run_indexed(tasks: Sequence[Callable[[], EvalReport]], jobs: int) -> list[EvalReport]:
    # results always ordered by task index, independent of completion order
    if jobs <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: t(), tasks))


def train_and_evaluate(
    dataset: MetricDataset,
    partition: Partition,
    trainer: Trainer,
    resample_kind: str = "none",
    resample_seed: int = 0,
) -> tuple[Classifier, EvalReport]:
    """One split/train/eval pass: optional training-split up-sampling,
    trainer callback, test-split report."""
    return _evaluate_indices(
        dataset,
        partition.train_idx,
        partition.valid_idx,
        partition.test_idx,
        trainer,
        resample_kind=resample_kind,
        resample_seed=resample_seed,
    )


def _evaluate_indices(
    dataset, train_idx, valid_idx, test_idx, trainer, resample_kind="none",
    resample_seed=0,
):
    train = dataset.take(train_idx)
    valid = dataset.take(valid_idx) if len(valid_idx) else None
    test = dataset.take(test_idx)
    if resample_kind == "upsample_50":
        train = upsample_50(train, resample_seed)
    model = trainer(train, valid)
    predicted = model.classify(test.X)
    return model, evaluate(test.labels, predicted, test.bug_counts)


def bootstrap_runs(
    dataset: MetricDataset,
    split_spec: SplitSpec,
    resample_spec: ResampleSpec,
    trainer: Trainer,
    jobs: int = 1,
) -> BootstrapResult:
    """Repeated random re-splitting: each repetition re-splits with a child
    seed of ``resample_spec.seed``, optionally up-samples the training
    split, trains via the callback, and evaluates on the test split."""

    def make_task(r: int) -> Callable[[], EvalReport]:
        def task() -> EvalReport:
            try:
                run_seed = derive_seed(resample_spec.seed, r)
                part = split(
                    dataset, replace(split_spec, seed=derive_seed(run_seed, 0))
                )
                _, report = train_and_evaluate(
                    dataset,
                    part,
                    trainer,
                    resample_kind=resample_spec.kind,
                    resample_seed=derive_seed(run_seed, 1),
                )
                return report
            except Exception as exc:
                raise RepetitionError(f"repetition {r} failed: {exc}") from exc

        return task

    tasks = [make_task(r) for r in range(resample_spec.repetitions)]
    reports = _run_indexed(tasks, jobs)
    return BootstrapResult(reports=reports, summary=aggregate(reports))


def kfold_partitions(
    dataset: MetricDataset, k: int, seed: int
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Index triples (train, valid, test) of the stratified k folds.

    Each fold serves once as the test set; a one-ninth validation slice
    (the 10/80 proportion) is carved from the remaining rows. On very
    small remainders the validation slice can round down to empty.
    """
    if k < 2:
        raise InvalidSpecError(f"k must be >= 2, got {k}")
    pos, neg = _class_indices(dataset)
    if k > min(pos.size, neg.size):
        raise InvalidSpecError(
            f"k={k} exceeds the minority-class count {min(pos.size, neg.size)}"
        )
    rng = np.random.default_rng(seed)
    pos_chunks = np.array_split(rng.permutation(pos), k)
    neg_chunks = np.array_split(rng.permutation(neg), k)

    partitions = []
    for fold in range(k):
        test_idx = np.concatenate((pos_chunks[fold], neg_chunks[fold]))
        rem_pos = np.concatenate(
            [c for i, c in enumerate(pos_chunks) if i != fold]
        )
        rem_neg = np.concatenate(
            [c for i, c in enumerate(neg_chunks) if i != fold]
        )
        valid_pos = _round_half_up(rem_pos.size / 9)
        valid_neg = _round_half_up(rem_neg.size / 9)
        valid_idx = np.concatenate((rem_pos[:valid_pos], rem_neg[:valid_neg]))
        train_idx = np.concatenate((rem_pos[valid_pos:], rem_neg[valid_neg:]))
        partitions.append((train_idx, valid_idx, test_idx))
    return partitions


def kfold(
    dataset: MetricDataset,
    k: int,
    seed: int,
    trainer: Trainer,
    jobs: int = 1,
) -> list[EvalReport]:
    """Stratified k-fold cross-validation over :func:`kfold_partitions`."""
    partitions = kfold_partitions(dataset, k, seed)

    def make_task(fold: int) -> Callable[[], EvalReport]:
        def task() -> EvalReport:
            try:
                train_idx, valid_idx, test_idx = partitions[fold]
                _, report = _evaluate_indices(
                    dataset, train_idx, valid_idx, test_idx, trainer
                )
                return report
            except Exception as exc:
                raise RepetitionError(f"fold {fold} failed: {exc}") from exc

        return task

    tasks = [make_task(fold) for fold in range(k)]
    return _run_indexed(tasks, jobs)
