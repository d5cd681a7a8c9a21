"""Mixing-based training and margin diagnostics for class-imbalanced
classification on tabular data.

The package covers the full loop: build or subsample an imbalanced
dataset, train a small classifier with one of the mixing / re-weighting
/ margin-loss methods from the catalog, and analyze the per-class
margins of the result. Hot numeric kernels run on a compiled backend
when available, with a pure-NumPy fallback (see :mod:`mixbal.backend`).
"""

from . import backend
from .augment import (
    MIX_METHODS,
    MixedBatch,
    MixerConfig,
    NeighborIndex,
    mix_batch,
    sample_lambda_x,
    select_pairs,
    smote_oversample,
)
from .data import (
    ClassHistogram,
    ImbalanceSpec,
    LabeledDataset,
    load_csv,
    long_tailed_counts,
    save_csv,
    split_balanced_eval,
    step_counts,
    subsample_imbalanced,
    synth_gaussian_blobs,
)
from .errors import (
    ConstantInputError,
    DegenerateSplitError,
    DivergenceError,
    EmptyClassError,
    InsufficientSamplesError,
    InvalidSpecError,
    MissingIndexError,
    MixbalError,
    ParseError,
    ShapeMismatchError,
    UnknownMethodError,
)
from .harness import (
    DatasetConfig,
    ExperimentConfig,
    MethodPlan,
    RunRecord,
    SourceConfig,
    compare,
    correlate,
    config_from_dict,
    default_benchmark_config,
    load_config,
    method_catalog,
    resolve_method,
    run_experiment,
    run_single,
    summarize,
)
from .metrics import (
    MarginReport,
    balanced_accuracy,
    class_margins,
    compute_margin_report,
    example_margins,
    l2_fit_error,
    majority_split,
    margin_decomposition,
    margin_gap,
    per_class_accuracy,
    spearman_rho,
    theoretical_margins,
)
from .model import (
    ModelParams,
    TrainConfig,
    drw_weights,
    export_logits,
    forward_logits,
    init_params,
    ldam_loss,
    ldam_margins,
    load_checkpoint,
    lr_at,
    predict,
    save_checkpoint,
    soft_cross_entropy,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "backend",
    "MIX_METHODS",
    "MixedBatch",
    "MixerConfig",
    "NeighborIndex",
    "mix_batch",
    "sample_lambda_x",
    "select_pairs",
    "smote_oversample",
    "ClassHistogram",
    "ImbalanceSpec",
    "LabeledDataset",
    "load_csv",
    "long_tailed_counts",
    "save_csv",
    "split_balanced_eval",
    "step_counts",
    "subsample_imbalanced",
    "synth_gaussian_blobs",
    "ConstantInputError",
    "DegenerateSplitError",
    "DivergenceError",
    "EmptyClassError",
    "InsufficientSamplesError",
    "InvalidSpecError",
    "MissingIndexError",
    "MixbalError",
    "ParseError",
    "ShapeMismatchError",
    "UnknownMethodError",
    "DatasetConfig",
    "ExperimentConfig",
    "MethodPlan",
    "RunRecord",
    "SourceConfig",
    "compare",
    "correlate",
    "config_from_dict",
    "default_benchmark_config",
    "load_config",
    "method_catalog",
    "resolve_method",
    "run_experiment",
    "run_single",
    "summarize",
    "MarginReport",
    "balanced_accuracy",
    "class_margins",
    "compute_margin_report",
    "example_margins",
    "l2_fit_error",
    "majority_split",
    "margin_decomposition",
    "margin_gap",
    "per_class_accuracy",
    "spearman_rho",
    "theoretical_margins",
    "ModelParams",
    "TrainConfig",
    "drw_weights",
    "export_logits",
    "forward_logits",
    "init_params",
    "ldam_loss",
    "ldam_margins",
    "load_checkpoint",
    "lr_at",
    "predict",
    "save_checkpoint",
    "soft_cross_entropy",
    "train",
    "__version__",
]
