"""Model document: a trained classifier as a portable JSON file.

The document is self-describing and holds everything prediction needs --
metric names, the normalization thresholds used at training time, the
centering means, the coefficient vector at the selected component count,
and the cut-off -- plus the full weight/loading matrices so latent scores
can be recomputed. Floats are serialized in shortest round-trip form, so
save/load is exact and re-saving is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError
from .mad_norm import ThresholdTable
from .pls_core import PlsModel, _coefficient_path
from .plsda import DaModel

FORMAT_NAME = "defectpls-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelDocument:
    model: DaModel
    metric_names: tuple[str, ...]
    thresholds: ThresholdTable


def to_dict(doc: ModelDocument) -> dict:
    model = doc.model
    pls = model.pls
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "metric_names": list(doc.metric_names),
        "thresholds": {
            name: doc.thresholds.entries[name] for name in doc.metric_names
        },
        "x_mean": pls.x_mean.tolist(),
        "y_mean": pls.y_mean,
        "coefficients": pls.coefficients(model.selected_l).tolist(),
        "n_components": pls.n_components,
        "weights": pls.W.tolist(),
        "x_loadings": pls.P.tolist(),
        "y_loadings": pls.q.tolist(),
        "cutoff": model.cutoff,
        "selected_l": model.selected_l,
        "selection_metric": model.selection_metric,
        "validation_curve": list(model.validation_curve),
    }


def from_dict(raw: dict) -> ModelDocument:
    if raw.get("format") != FORMAT_NAME:
        raise ParseError(f"not a {FORMAT_NAME} document: format={raw.get('format')!r}")
    if raw.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported model version {raw.get('version')!r}")
    try:
        metric_names = tuple(raw["metric_names"])
        W = np.asarray(raw["weights"], dtype=float).reshape(len(metric_names), -1)
        P = np.asarray(raw["x_loadings"], dtype=float).reshape(W.shape)
        q = np.asarray(raw["y_loadings"], dtype=float)
        n_components = int(raw["n_components"])
        l = n_components
        B = (
            _coefficient_path(W, P, q)[:, l - 1]
            if l
            else np.zeros(len(metric_names))
        )
        pls = PlsModel(
            x_mean=np.asarray(raw["x_mean"], dtype=float),
            y_mean=float(raw["y_mean"]),
            W=W,
            P=P,
            q=q,
            B=B,
            n_components=n_components,
        )
        model = DaModel(
            pls=pls,
            selected_l=int(raw["selected_l"]),
            cutoff=float(raw["cutoff"]),
            selection_metric=raw["selection_metric"],
            validation_curve=tuple(raw["validation_curve"]),
        )
        thresholds = ThresholdTable(
            entries={name: float(v) for name, v in raw["thresholds"].items()}
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed model document: {exc}") from exc
    return ModelDocument(model=model, metric_names=metric_names, thresholds=thresholds)


def save_model(doc: ModelDocument, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(to_dict(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path) -> ModelDocument:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return from_dict(raw)
