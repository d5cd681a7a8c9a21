"""Experiment runner: composes data, mixers, training, and metrics.

A JSON experiment config names a dataset recipe, a method from the
catalog, and a seed list; ``run_experiment`` trains one model per seed,
persists a record and a logits export for each, and aggregates a
mean/std summary. Reruns of the same config reproduce every record
byte for byte.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .augment import MixerConfig, smote_oversample
from .data import (
    ImbalanceSpec,
    LabeledDataset,
    load_csv,
    split_balanced_eval,
    subsample_imbalanced,
    synth_gaussian_blobs,
)
from .errors import InvalidSpecError, UnknownMethodError
from .metrics import MarginReport, compute_margin_report, spearman_rho
from .model import TrainConfig, export_logits, save_logits_csv, train
from .rng import component_rng

METHOD_BASES = (
    "erm",
    "ldam",
    "smote",
    "smote-mix",
    "neighbor-mix",
    "mixup",
    "remix",
    "mamix",
    "mamix-remix",
)

_MIXER_BY_BASE = {
    "smote-mix": "smote_mix",
    "neighbor-mix": "neighbor_mix",
    "mixup": "mixup",
    "remix": "remix",
    "mamix": "mamix",
    "mamix-remix": "mamix_remix",
}


@dataclass(frozen=True)
class MethodPlan:
    """What a catalog name resolves to."""

    name: str
    mixer_method: str | None
    loss: str
    deferred_reweight: bool
    smote_preprocess: bool = False


def method_catalog() -> list[str]:
    """All accepted method names."""
    names = ["drw"]
    for base in METHOD_BASES:
        names.append(base)
        names.append(f"{base}-drw")
    return sorted(set(names))


def resolve_method(name: str) -> MethodPlan:
    """Map a catalog name to its (mixer, loss, re-weighting) triple.

    ``drw`` is an alias for ``erm-drw``; plans carry the canonical name.
    """
    canonical = name.strip().lower()
    if canonical == "drw":
        canonical = "erm-drw"
    deferred = canonical.endswith("-drw")
    base = canonical[:-4] if deferred else canonical
    if base not in METHOD_BASES:
        raise UnknownMethodError(
            f"unknown method {name!r}; valid names: {', '.join(method_catalog())}"
        )
    return MethodPlan(
        name=canonical,
        mixer_method=_MIXER_BY_BASE.get(base),
        loss="ldam" if base == "ldam" else "soft_ce",
        deferred_reweight=deferred,
        smote_preprocess=base == "smote",
    )


@dataclass(frozen=True)
class SourceConfig:
    """Where the balanced source data comes from."""

    kind: str = "blobs"
    classes: int = 10
    dim: int = 16
    n_per_class: int = 1200
    sep: float = 3.0
    seed: int | None = None  # None: derive from the run seed
    path: str | None = None  # csv only
    header: bool = False

    def __post_init__(self):
        if self.kind not in ("blobs", "csv"):
            raise InvalidSpecError(f"unknown source kind {self.kind!r}")
        if self.kind == "csv" and not self.path:
            raise InvalidSpecError("csv source needs a path")


@dataclass(frozen=True)
class DatasetConfig:
    """Source recipe plus the imbalance profile and eval split size."""

    source: SourceConfig = field(default_factory=SourceConfig)
    imbalance: str = "long_tailed"
    rho: float = 100.0
    mu: float = 0.5
    n_max: int | None = 1000
    eval_per_class: int = 200

    def fingerprint(self) -> dict:
        """Seed-free description used to match records and summaries."""
        return {
            "source": {
                key: value
                for key, value in asdict(self.source).items()
                if value is not None
            },
            "imbalance": self.imbalance,
            "rho": self.rho,
            "mu": self.mu,
            "n_max": self.n_max,
            "eval_per_class": self.eval_per_class,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: dataset, method, hyperparameters, seeds."""

    dataset: DatasetConfig
    method: str
    mixer: MixerConfig | None = None
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=100))
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)

    def __post_init__(self):
        resolve_method(self.method)
        if not self.seeds:
            raise InvalidSpecError("need at least one seed")


@dataclass
class RunRecord:
    """One seed's outcome."""

    seed: int
    method: str
    dataset: dict
    balanced_accuracy: float
    per_class_accuracy: list[float]
    margin_report: MarginReport
    final_train_loss: float
    wall_time_s: float

    def to_dict(self) -> dict:
        # Wall time deliberately left out: record files must be
        # byte-identical across reruns.
        return {
            "seed": self.seed,
            "method": self.method,
            "dataset": self.dataset,
            "balanced_accuracy": float(self.balanced_accuracy),
            "per_class_accuracy": [float(v) for v in self.per_class_accuracy],
            "margin_report": self.margin_report.to_dict(),
            "final_train_loss": float(self.final_train_loss),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunRecord":
        return cls(
            seed=int(payload["seed"]),
            method=payload["method"],
            dataset=payload["dataset"],
            balanced_accuracy=float(payload["balanced_accuracy"]),
            per_class_accuracy=[float(v) for v in payload["per_class_accuracy"]],
            margin_report=MarginReport.from_dict(payload["margin_report"]),
            final_train_loss=float(payload["final_train_loss"]),
            wall_time_s=float(payload.get("wall_time_s", 0.0)),
        )


# --- config file parsing -------------------------------------------------

def _take(section: dict, name: str, allowed: set[str], required: set[str] = frozenset()):
    unknown = set(section) - allowed
    if unknown:
        raise InvalidSpecError(
            f"unknown keys in {name!r} section: {sorted(unknown)} "
            f"(allowed: {sorted(allowed)})"
        )
    missing = required - set(section)
    if missing:
        raise InvalidSpecError(f"missing keys in {name!r} section: {sorted(missing)}")


_IMBALANCE_ALIASES = {"lt": "long_tailed", "step": "step", "long_tailed": "long_tailed", "none": "none"}


def config_from_dict(payload: dict) -> ExperimentConfig:
    """Strict parse of the experiment file; unknown keys are rejected."""
    _take(payload, "top level", {"dataset", "method", "mixer", "train", "seeds"}, {"dataset", "method"})

    ds_section = dict(payload["dataset"])
    _take(ds_section, "dataset", {"source", "imbalance", "rho", "mu", "n_max", "eval_per_class"})
    src_section = dict(ds_section.pop("source", {}))
    _take(src_section, "dataset.source", {"kind", "classes", "dim", "n_per_class", "sep", "seed", "path", "header"})
    source = SourceConfig(**src_section)
    imbalance = ds_section.pop("imbalance", "long_tailed")
    if imbalance not in _IMBALANCE_ALIASES:
        raise InvalidSpecError(
            f"unknown imbalance kind {imbalance!r}; use one of {sorted(_IMBALANCE_ALIASES)}"
        )
    dataset = DatasetConfig(source=source, imbalance=_IMBALANCE_ALIASES[imbalance], **ds_section)

    mixer_section = dict(payload.get("mixer", {}))
    if "method" in mixer_section:
        raise InvalidSpecError("the mixer method is derived from the experiment method name")
    _take(mixer_section, "mixer", {"alpha", "omega", "tau", "p_majority", "k_neighbors", "per_pair_lambda"})

    train_section = dict(payload.get("train", {}))
    for fixed in ("loss", "seed"):
        if fixed in train_section:
            raise InvalidSpecError(
                f"train.{fixed} is derived (loss from the method name, seed from the seeds list)"
            )
    _take(
        train_section,
        "train",
        {
            "epochs", "batch_size", "lr", "momentum", "weight_decay",
            "warmup_epochs", "decay_epochs", "decay_factor", "drw_epoch",
            "architecture", "hidden", "ldam_max_margin", "ldam_scale",
            "reweight", "cb_beta",
        },
    )
    train_kwargs = asdict(default_train_config())
    train_kwargs.update(train_section)
    train_kwargs["decay_epochs"] = tuple(train_kwargs["decay_epochs"])
    train_cfg = TrainConfig(**train_kwargs)

    seeds = payload.get("seeds", [1, 2, 3, 4, 5])
    method = payload["method"]
    plan = resolve_method(method)
    mixer = (
        MixerConfig(method=plan.mixer_method, **mixer_section)
        if plan.mixer_method
        else None
    )
    return ExperimentConfig(
        dataset=dataset,
        method=method,
        mixer=mixer,
        train=train_cfg,
        seeds=tuple(int(s) for s in seeds),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    return config_from_dict(json.loads(Path(path).read_text()))


def default_train_config() -> TrainConfig:
    """Desk-scale recipe: MLP-64, 100 epochs, warm-up 5, decay at 80/90,
    re-weighting deferred to epoch 80."""
    return TrainConfig(
        epochs=100,
        batch_size=128,
        lr=0.1,
        momentum=0.9,
        weight_decay=2e-4,
        warmup_epochs=5,
        decay_epochs=(80, 90),
        decay_factor=0.01,
        drw_epoch=80,
        architecture="mlp",
        hidden=64,
        reweight="class_balanced",
    )


def default_benchmark_config(
    method: str,
    rho: float = 100.0,
    imbalance: str = "long_tailed",
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5),
) -> ExperimentConfig:
    """The default blob benchmark grid point for one method."""
    plan = resolve_method(method)
    return ExperimentConfig(
        dataset=DatasetConfig(imbalance=imbalance, rho=rho),
        method=method,
        mixer=MixerConfig(method=plan.mixer_method) if plan.mixer_method else None,
        train=default_train_config(),
        seeds=seeds,
    )


# --- running -------------------------------------------------------------

def _build_source(source: SourceConfig, run_seed: int) -> LabeledDataset:
    if source.kind == "csv":
        return load_csv(source.path, header=source.header)
    seed = source.seed if source.seed is not None else run_seed
    return synth_gaussian_blobs(
        source.classes, source.dim, source.n_per_class, source.sep, seed
    )


def prepare_run_data(
    config: ExperimentConfig, run_seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Balanced source -> balanced eval split -> imbalanced train set."""
    source = _build_source(config.dataset.source, run_seed)
    pool, eval_ds = split_balanced_eval(
        source, config.dataset.eval_per_class, seed=run_seed
    )
    spec = ImbalanceSpec(
        kind=config.dataset.imbalance,
        rho=config.dataset.rho,
        mu=config.dataset.mu,
        seed=run_seed,
    )
    train_ds = subsample_imbalanced(pool, spec, n_max=config.dataset.n_max)
    return train_ds, eval_ds


def run_single(config: ExperimentConfig, run_seed: int) -> tuple[RunRecord, np.ndarray]:
    """Train and evaluate one seed; returns the record and eval logits."""
    started = time.perf_counter()
    plan = resolve_method(config.method)
    train_ds, eval_ds = prepare_run_data(config, run_seed)
    train_counts = train_ds.class_counts()
    if plan.smote_preprocess:
        k = config.mixer.k_neighbors if config.mixer else 5
        train_ds = smote_oversample(train_ds, k, component_rng(run_seed, "smote"))
    train_cfg = replace(
        config.train,
        seed=run_seed,
        loss=plan.loss,
        reweight=config.train.reweight if plan.deferred_reweight else "none",
        drw_epoch=config.train.drw_epoch if plan.deferred_reweight else None,
    )
    params, history = train(train_ds, config.mixer, train_cfg, eval_ds=eval_ds)
    logits = export_logits(params, eval_ds)
    # Margin weights always use the pre-oversampling training histogram.
    report = compute_margin_report(logits, eval_ds.labels, train_counts)
    record = RunRecord(
        seed=run_seed,
        method=plan.name,
        dataset=config.dataset.fingerprint(),
        balanced_accuracy=report.balanced_accuracy,
        per_class_accuracy=list(report.per_class_accuracy),
        margin_report=report,
        final_train_loss=history[-1]["loss"],
        wall_time_s=time.perf_counter() - started,
    )
    return record, logits


def _mean_std(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std}


def summarize(config: ExperimentConfig, records: list[RunRecord]) -> dict:
    """Aggregate per-seed records into the mean/std summary table."""
    return {
        "method": resolve_method(config.method).name,
        "dataset": config.dataset.fingerprint(),
        "seeds": [r.seed for r in records],
        "single_run": len(records) == 1,
        "balanced_accuracy": _mean_std([r.balanced_accuracy for r in records]),
        "margin_gap": _mean_std([r.margin_report.margin_gap for r in records]),
        "l2_fit_error": _mean_std([r.margin_report.l2_fit_error for r in records]),
        "per_class_accuracy_mean": [
            float(np.mean([r.per_class_accuracy[j] for r in records]))
            for j in range(len(records[0].per_class_accuracy))
        ],
        "wall_time_s": _mean_std([r.wall_time_s for r in records]),
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def run_experiment(config: ExperimentConfig, out_dir: str | Path) -> dict:
    """Run every seed, persist records/logits/summary, return the summary.

    Layout under ``out_dir``: ``config.json`` snapshot,
    ``record_seed<k>.json`` and ``logits_seed<k>.csv`` per seed,
    ``summary.json`` and ``summary.csv``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snapshot = {
        "dataset": config.dataset.fingerprint(),
        "method": config.method,
        "mixer": None if config.mixer is None else asdict(config.mixer),
        "train": asdict(config.train),
        "seeds": list(config.seeds),
    }
    _write_json(out / "config.json", snapshot)
    records = []
    for seed in config.seeds:
        record, logits = run_single(config, seed)
        _write_json(out / f"record_seed{seed}.json", record.to_dict())
        save_logits_csv(logits, out / f"logits_seed{seed}.csv")
        records.append(record)
    summary = summarize(config, records)
    _write_json(out / "summary.json", summary)
    _write_summary_csv(out / "summary.csv", [summary])
    return summary


def _summary_csv_row(summary: dict) -> list:
    return [
        summary["method"],
        summary["dataset"]["rho"],
        summary["dataset"]["imbalance"],
        summary["balanced_accuracy"]["mean"],
        summary["balanced_accuracy"]["std"],
        summary["margin_gap"]["mean"],
    ]


def _write_summary_csv(path: Path, summaries: list[dict]) -> None:
    import csv

    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "rho", "kind", "mean", "std", "margin_gap_mean"])
        for summary in summaries:
            writer.writerow(_summary_csv_row(summary))


# --- cross-experiment reports -------------------------------------------

def compare(summary_paths: list[str | Path]) -> dict:
    """Side-by-side view of several summaries over one dataset spec.

    Deltas are reported against the first summary. Mismatched dataset
    specs are an error.
    """
    if not summary_paths:
        raise InvalidSpecError("need at least one summary to compare")
    summaries = [json.loads(Path(p).read_text()) for p in summary_paths]
    reference = summaries[0]["dataset"]
    for path, summary in zip(summary_paths, summaries):
        if summary["dataset"] != reference:
            raise InvalidSpecError(
                f"dataset spec of {path} does not match the first summary"
            )
    base_acc = summaries[0]["balanced_accuracy"]["mean"]
    base_gap = summaries[0]["margin_gap"]["mean"]
    rows = [
        {
            "method": s["method"],
            "balanced_accuracy_mean": s["balanced_accuracy"]["mean"],
            "balanced_accuracy_std": s["balanced_accuracy"]["std"],
            "margin_gap_mean": s["margin_gap"]["mean"],
            "delta_accuracy": s["balanced_accuracy"]["mean"] - base_acc,
            "delta_margin_gap": s["margin_gap"]["mean"] - base_gap,
        }
        for s in summaries
    ]
    return {"dataset": reference, "rows": rows}


def correlate(record_paths: list[str | Path]) -> dict:
    """Rank correlation between margin gap and balanced accuracy across
    runs, with the scatter points for external plotting."""
    if len(record_paths) < 3:
        raise InvalidSpecError("need at least three records to correlate")
    records = [RunRecord.from_dict(json.loads(Path(p).read_text())) for p in record_paths]
    gaps = [r.margin_report.margin_gap for r in records]
    accs = [r.balanced_accuracy for r in records]
    return {
        "spearman_rho": spearman_rho(np.array(gaps), np.array(accs)),
        "points": [
            {
                "method": r.method,
                "seed": r.seed,
                "margin_gap": gap,
                "balanced_accuracy": acc,
            }
            for r, gap, acc in zip(records, gaps, accs)
        ],
    }
