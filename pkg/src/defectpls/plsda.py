"""Two-class discriminant classification on top of the PLS regression core.

Bug counts are encoded as a +1/-1 dummy response, a PLS1 model is fit on
the training split, and the component count is chosen by maximizing a
validation-split measure (F1 of the positive class by default). Prediction
thresholds the raw regression output at a cut-off: strictly greater means
bugged, ties and below mean non-bugged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import pls_core
from .dataset import MetricDataset
from .errors import (
    DegenerateClassError,
    DegenerateDesignError,
    InvalidInputError,
    InvalidSpecError,
)
from .metrics_eval import confusion, measures
from .pls_core import FitOptions, PlsModel

BUGGED = 1
NON_BUGGED = -1

SELECTION_METRICS = ("F1p", "F1n", "MCC")
_METRIC_FIELD = {"F1p": "f1p", "F1n": "f1n", "MCC": "mcc"}


def encode_labels(bug_counts) -> np.ndarray:
    """+1 for rows with at least one bug, -1 for bug-free rows."""
    counts = np.asarray(bug_counts)
    if counts.size == 0:
        raise InvalidInputError("no bug counts to encode")
    if (counts < 0).any():
        raise InvalidInputError("bug counts must be non-negative")
    return np.where(counts >= 1, BUGGED, NON_BUGGED)


def selection_value(report, metric: str) -> float:
    """Validation measure used for ranking component counts; a degenerate
    (flagged) value ranks as 0 so it can never win."""
    if metric not in SELECTION_METRICS:
        raise InvalidSpecError(
            f"unknown selection metric {metric!r}; expected one of {SELECTION_METRICS}"
        )
    value = getattr(report, _METRIC_FIELD[metric])
    return 0.0 if math.isnan(value) else float(value)


@dataclass(frozen=True)
class DaModel:
    """Discriminant model: a PLS fit plus an operating point.

    ``selected_l`` is the component count chosen on the validation split;
    ``validation_curve[l-1]`` records the validation measure at each
    candidate ``l``.
    """

    pls: PlsModel
    selected_l: int
    cutoff: float = 0.0
    selection_metric: str = "F1p"
    validation_curve: tuple[float, ...] = ()

    def __post_init__(self):
        if not 1 <= self.selected_l <= self.pls.n_components:
            raise InvalidSpecError(
                f"selected_l={self.selected_l} outside 1..{self.pls.n_components}"
            )

    def decision_values(self, X) -> np.ndarray:
        return pls_core.predict(self.pls, X, l=self.selected_l)

    def classify(self, X) -> np.ndarray:
        return np.where(self.decision_values(X) > self.cutoff, BUGGED, NON_BUGGED)


def _require_both_classes(labels: np.ndarray, what: str) -> None:
    if not ((labels == BUGGED).any() and (labels == NON_BUGGED).any()):
        raise DegenerateClassError(f"{what} split contains rows of only one class")


def train_da(
    train: MetricDataset,
    valid: MetricDataset,
    opts: FitOptions = FitOptions(),
    cutoff: float = 0.0,
    selection_metric: str = "F1p",
) -> DaModel:
    """Fit on the training split, then pick the component count whose
    truncated predictions maximize ``selection_metric`` on the validation
    split (smallest count wins ties)."""
    if valid is None:
        raise DegenerateClassError(
            "component selection needs a non-empty validation split"
        )
    y_train = train.labels
    y_valid = valid.labels
    _require_both_classes(y_train, "training")
    _require_both_classes(y_valid, "validation")
    if selection_metric not in SELECTION_METRICS:
        raise InvalidSpecError(
            f"unknown selection metric {selection_metric!r}"
        )

    capacity = min(train.n_rows - 1, train.n_metrics)
    effective = opts
    if opts.max_components > capacity:
        effective = replace(opts, max_components=capacity)
    pls = pls_core.fit(train.X, y_train.astype(float), effective)
    if pls.n_components == 0:
        raise DegenerateDesignError(
            "no usable latent variables (response orthogonal to every metric)"
        )

    # decision values on the validation split for every candidate l at once
    path = pls.coefficient_path()
    decision_matrix = (valid.X - pls.x_mean) @ path + pls.y_mean
    curve = []
    for l in range(1, pls.n_components + 1):
        predicted = np.where(
            decision_matrix[:, l - 1] > cutoff, BUGGED, NON_BUGGED
        )
        report = measures(confusion(y_valid, predicted))
        curve.append(selection_value(report, selection_metric))
    selected_l = int(np.argmax(curve)) + 1

    return DaModel(
        pls=pls,
        selected_l=selected_l,
        cutoff=cutoff,
        selection_metric=selection_metric,
        validation_curve=tuple(curve),
    )


def classify(model: DaModel, X) -> np.ndarray:
    """+1/-1 decisions: bugged iff the decision value strictly exceeds the
    cut-off."""
    return model.classify(X)


def decision_values(model: DaModel, X) -> np.ndarray:
    """Raw regression outputs before thresholding (for overlap histograms)."""
    return model.decision_values(X)
