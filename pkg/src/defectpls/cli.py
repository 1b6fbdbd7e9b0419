"""Command-line front end.

Commands: ``thresholds`` (derive normalization thresholds from a benchmark
CSV), ``train`` (normalize, split, train, evaluate, export the model),
``eval`` (apply a saved model to a dataset), ``permtest`` (label
permutation test), ``scores`` (export latent coordinates and raw decision
values for plotting). Every command is deterministic under fixed seeds;
``--seed`` overrides all seeds in the effective configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from . import pls_core
from .dataset import MetricDataset, load_dataset
from .errors import ConfigurationError, DefectPlsError, ParseError
from .mad_norm import (
    MadParams,
    build_threshold_table,
    load_thresholds,
    normalize,
    save_thresholds,
)
from .metrics_eval import (
    AggregateReport,
    TABLE_COLUMNS,
    aggregate,
    evaluate,
    format_table,
    write_reports_csv,
)
from .model_io import ModelDocument, load_model, save_model
from .permtest import PermTestSpec, null_histogram, permutation_test
from .pls_core import FitOptions
from .plsda import train_da
from .sampling import (
    ResampleSpec,
    SplitSpec,
    bootstrap_runs,
    derive_seed,
    split,
    train_and_evaluate,
)


@dataclass(frozen=True)
class RunConfig:
    keep_columns: tuple[str, ...]
    bug_column: str
    id_column: str | None
    split: SplitSpec
    resample: ResampleSpec
    permtest: PermTestSpec
    fit: FitOptions
    cutoff: float
    selection_metric: str


def _default_config_dict() -> dict:
    data = resources.files("defectpls").joinpath("data/default_config.json")
    return json.loads(data.read_text(encoding="utf-8"))


def _merge(base: dict, override: dict, prefix: str = "") -> None:
    for key, value in override.items():
        if key not in base:
            raise ConfigurationError(f"unknown config key: {prefix}{key}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, f"{prefix}{key}.")
        else:
            base[key] = value


def load_config(path: str | None = None, seed: int | None = None) -> RunConfig:
    """Effective configuration: packaged defaults, overridden key-by-key by
    the user's JSON file, with ``seed`` (when given) replacing every seed."""
    raw = _default_config_dict()
    if path is not None:
        try:
            user = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigurationError(f"{path}: config must be a JSON object")
        _merge(raw, user)
    if seed is not None:
        raw["split"]["seed"] = seed
        raw["resample"]["seed"] = seed
        raw["permtest"]["seed"] = seed
    if not raw["keep_columns"]:
        raise ConfigurationError("keep_columns must not be empty")
    try:
        return RunConfig(
            keep_columns=tuple(raw["keep_columns"]),
            bug_column=raw["bug_column"],
            id_column=raw["id_column"],
            split=SplitSpec(**raw["split"]),
            resample=ResampleSpec(**raw["resample"]),
            permtest=PermTestSpec(**raw["permtest"]),
            fit=FitOptions(**raw["fit"]),
            cutoff=float(raw["cutoff"]),
            selection_metric=raw["selection_metric"],
        )
    except TypeError as exc:
        raise ConfigurationError(f"bad config structure: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_labeled(path, cfg: RunConfig, keep_columns=None) -> MetricDataset:
    dataset = load_dataset(
        path,
        keep_columns=keep_columns if keep_columns is not None else cfg.keep_columns,
        bug_column=cfg.bug_column,
        id_column=cfg.id_column,
    )
    if dataset.bug_counts is None:
        raise ConfigurationError(
            f"dataset {path} has no {cfg.bug_column!r} column"
        )
    return dataset


def _make_trainer(cfg: RunConfig):
    def trainer(train, valid):
        return train_da(
            train,
            valid,
            cfg.fit,
            cutoff=cfg.cutoff,
            selection_metric=cfg.selection_metric,
        )

    return trainer


def _write_summary_csv(summary: AggregateReport, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["measure", "mean", "sd", "n_used", "n_degenerate"])
        for name in TABLE_COLUMNS:
            s = summary.stats[name]
            writer.writerow(
                [name, repr(s.mean), repr(s.sd), s.n_used, s.n_degenerate]
            )


def cmd_thresholds(args) -> int:
    cfg = load_config(args.config, args.seed)
    benchmark = load_dataset(
        args.benchmark,
        keep_columns=None,  # every metric column in the benchmark
        bug_column=cfg.bug_column,
        id_column=cfg.id_column,
    )
    table = build_threshold_table(benchmark, MadParams(k=args.k))
    out = _out_dir(args) / "thresholds.csv"
    save_thresholds(table, out)
    print(f"wrote {out} ({len(table.entries)} metrics)")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config, args.seed)
    table = load_thresholds(args.thresholds)
    dataset = _load_labeled(args.dataset, cfg)
    normalized = normalize(dataset, table)
    trainer = _make_trainer(cfg)

    result = bootstrap_runs(
        normalized, cfg.split, cfg.resample, trainer, jobs=args.jobs
    )
    # model document comes from repetition 0, recomputed deterministically
    run_seed = derive_seed(cfg.resample.seed, 0)
    part = split(normalized, replace(cfg.split, seed=derive_seed(run_seed, 0)))
    model, _ = train_and_evaluate(
        normalized,
        part,
        trainer,
        resample_kind=cfg.resample.kind,
        resample_seed=derive_seed(run_seed, 1),
    )

    out = _out_dir(args)
    save_model(
        ModelDocument(model=model, metric_names=normalized.names, thresholds=table),
        out / "model.json",
    )
    write_reports_csv(result.reports, out / "reports.csv")
    _write_summary_csv(result.summary, out / "summary.csv")
    summary_text = format_table(result.summary)
    (out / "summary.txt").write_text(summary_text + "\n", encoding="utf-8")
    print(
        f"trained on {normalized.n_rows} rows, "
        f"{cfg.resample.repetitions} repetition(s); "
        f"model uses {model.selected_l} latent variable(s)"
    )
    print(summary_text)
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config, args.seed)
    doc = load_model(args.model)
    dataset = _load_labeled(args.dataset, cfg, keep_columns=doc.metric_names)
    normalized = normalize(dataset, doc.thresholds)
    predicted = doc.model.classify(normalized.X)
    report = evaluate(normalized.labels, predicted, normalized.bug_counts)
    out = _out_dir(args)
    write_reports_csv([report], out / "eval_report.csv")
    print(format_table(aggregate([report])))
    return 0


def cmd_permtest(args) -> int:
    cfg = load_config(args.config, args.seed)
    table = load_thresholds(args.thresholds)
    dataset = _load_labeled(args.dataset, cfg)
    normalized = normalize(dataset, table)
    result = permutation_test(
        normalized,
        cfg.split,
        cfg.fit,
        cfg.permtest,
        cutoff=cfg.cutoff,
        selection_metric=cfg.selection_metric,
        jobs=args.jobs,
    )
    out = _out_dir(args)

    with (out / "null_values.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["permutation", *result.statistics])
        for r in range(len(result.null_values[result.statistics[0]])):
            writer.writerow(
                [str(r)]
                + [repr(float(result.null_values[s][r])) for s in result.statistics]
            )

    for stat in result.statistics:
        hist = null_histogram(result, args.bins, statistic=stat)
        with (out / f"histogram_{stat}.csv").open(
            "w", newline="", encoding="utf-8"
        ) as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["bin_low", "bin_high", "count"])
            for b in range(hist.counts.size):
                writer.writerow(
                    [
                        repr(float(hist.edges[b])),
                        repr(float(hist.edges[b + 1])),
                        str(int(hist.counts[b])),
                    ]
                )
            writer.writerow(["observed", repr(float(hist.observed)), ""])

    with (out / "p_values.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["statistic", "observed", "p_value"])
        for stat in result.statistics:
            writer.writerow(
                [stat, repr(result.observed[stat]), repr(result.p_values[stat])]
            )

    for stat in result.statistics:
        print(
            f"{stat}: observed {result.observed[stat]:.4f}, "
            f"p = {result.p_values[stat]:.6g} "
            f"({len(result.null_values[stat])} permutations)"
        )
    return 0


def cmd_scores(args) -> int:
    cfg = load_config(args.config, args.seed)
    doc = load_model(args.model)
    dataset = load_dataset(
        args.dataset,
        keep_columns=doc.metric_names,
        bug_column=cfg.bug_column,
        id_column=cfg.id_column,
    )
    normalized = normalize(dataset, doc.thresholds)
    l = args.components if args.components is not None else doc.model.selected_l
    latent = pls_core.scores(doc.model.pls, normalized.X, l)
    values = doc.model.decision_values(normalized.X)
    predicted = doc.model.classify(normalized.X)
    ids = (
        normalized.row_ids
        if normalized.row_ids is not None
        else tuple(str(i) for i in range(normalized.n_rows))
    )
    out = _out_dir(args)

    with (out / "scores.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"score_{j + 1}" for j in range(l)])
        for i in range(normalized.n_rows):
            writer.writerow([ids[i]] + [repr(v) for v in latent[i].tolist()])

    with (out / "decision_values.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        has_labels = normalized.bug_counts is not None
        header = ["id", "decision_value", "predicted"]
        if has_labels:
            header.append("actual")
        writer.writerow(header)
        labels = normalized.labels if has_labels else None
        for i in range(normalized.n_rows):
            row = [ids[i], repr(float(values[i])), str(int(predicted[i]))]
            if has_labels:
                row.append(str(int(labels[i])))
            writer.writerow(row)

    print(f"wrote scores for {normalized.n_rows} rows at l={l}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="defectpls",
        description=(
            "Defect prediction via PLS discriminant analysis on "
            "MAD-normalized source-code metrics"
        ),
    )
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=None,
                        help="override every seed in the configuration")
    shared.add_argument("--jobs", type=int, default=1,
                        help="worker threads for repetitions (default 1)")
    shared.add_argument("--config", default=None,
                        help="JSON config overriding the packaged defaults")
    shared.add_argument("--out", default=".", help="output directory")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thresholds", parents=[shared],
                       help="derive MAD thresholds from a benchmark CSV")
    p.add_argument("benchmark")
    p.add_argument("--k", type=float, default=3.0,
                   help="MAD scale factor (default 3)")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("train", parents=[shared],
                       help="normalize, split, train and evaluate")
    p.add_argument("dataset")
    p.add_argument("thresholds")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[shared],
                       help="apply a saved model to a dataset")
    p.add_argument("model")
    p.add_argument("dataset")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("permtest", parents=[shared],
                       help="label permutation test")
    p.add_argument("dataset")
    p.add_argument("thresholds")
    p.add_argument("--bins", type=int, default=30,
                   help="histogram bins (default 30)")
    p.set_defaults(func=cmd_permtest)

    p = sub.add_parser("scores", parents=[shared],
                       help="export latent coordinates and decision values")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--components", type=int, default=None,
                   help="latent variables to export (default: the selected count)")
    p.set_defaults(func=cmd_scores)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("invalid-spec: --jobs must be >= 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except DefectPlsError as exc:
        print(f"{exc.category}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io-error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
