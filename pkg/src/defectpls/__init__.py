"""Defect prediction toolkit: MAD-normalized static source-code metrics,
PLS1 regression via stabilized bidiagonalization, discriminant
classification with validation-driven component selection, resampling
evaluation, and a classification permutation test."""

from .dataset import MetricDataset, load_dataset, save_dataset
from .errors import (
    ConfigurationError,
    DefectPlsError,
    DegenerateClassError,
    DegenerateDesignError,
    DegenerateSampleWarning,
    DimensionMismatchError,
    InvalidInputError,
    InvalidSpecError,
    ParseError,
    RepetitionError,
)
from .mad_norm import (
    MadParams,
    ThresholdTable,
    build_threshold_table,
    load_thresholds,
    mad,
    mad_threshold,
    normalize,
    save_thresholds,
)
from .metrics_eval import (
    AggregateReport,
    ConfusionCounts,
    EvalReport,
    aggregate,
    completeness,
    confusion,
    evaluate,
    measures,
)
from .model_io import ModelDocument, load_model, save_model
from .permtest import (
    Histogram,
    PermTestResult,
    PermTestSpec,
    null_histogram,
    permutation_test,
)
from .pls_core import FitOptions, PlsModel, fit, predict, scores
from .plsda import (
    BUGGED,
    NON_BUGGED,
    DaModel,
    classify,
    decision_values,
    encode_labels,
    train_da,
)
from .sampling import (
    BootstrapResult,
    Partition,
    ResampleSpec,
    SplitSpec,
    bootstrap_runs,
    derive_seed,
    kfold,
    kfold_partitions,
    split,
    train_and_evaluate,
    upsample_50,
)

__version__ = "0.1.0"
