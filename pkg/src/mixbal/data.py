"""Datasets and controlled class imbalance.

Builds labeled feature/label datasets from synthetic Gaussian blobs or
CSV files, carves out balanced evaluation splits, and subsamples a
balanced source down to a long-tailed or step class-size profile with a
chosen imbalance ratio.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    InsufficientSamplesError,
    InvalidSpecError,
    ParseError,
)
from .rng import component_rng


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ClassHistogram:
    """Per-class sample counts."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 1 or counts.size < 2:
            raise InvalidSpecError("histogram needs at least two classes")
        if (counts < 1).any():
            raise InvalidSpecError("all class counts must be >= 1")

    @property
    def num_classes(self) -> int:
        return int(self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def imbalance_ratio(self) -> float:
        return float(self.counts.max() / self.counts.min())


@dataclass(frozen=True)
class ImbalanceSpec:
    """How to skew a balanced source: profile kind, ratio, and seed.

    ``mu`` is only meaningful for the step profile (fraction of classes
    in the minority).
    """

    kind: str
    rho: float
    mu: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("long_tailed", "step", "none"):
            raise InvalidSpecError(f"unknown imbalance kind {self.kind!r}")
        if self.rho < 1:
            raise InvalidSpecError("imbalance ratio must be >= 1")
        if self.kind == "step" and not 0 < self.mu < 1:
            raise InvalidSpecError("mu must be in (0, 1)")

    def histogram(self, n_max: int, num_classes: int) -> ClassHistogram:
        if self.kind == "long_tailed":
            return long_tailed_counts(n_max, num_classes, self.rho)
        if self.kind == "step":
            return step_counts(n_max, num_classes, self.rho, self.mu)
        return ClassHistogram(np.full(num_classes, n_max, dtype=np.int64))


@dataclass(frozen=True)
class LabeledDataset:
    """Dense feature matrix with integer class labels.

    Immutable after construction; every sampling and training routine
    treats it as read-only.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        if feats.ndim != 2:
            raise InvalidSpecError("features must be a 2-d matrix")
        if labels.shape != (feats.shape[0],):
            raise InvalidSpecError("labels must align with feature rows")
        if self.num_classes < 2:
            raise InvalidSpecError("need at least two classes")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise InvalidSpecError("labels outside [0, num_classes)")
        feats.setflags(write=False)
        labels.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def class_indices(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


def long_tailed_counts(n_max: int, num_classes: int, rho: float) -> ClassHistogram:
    """Geometrically decaying class sizes with head/tail ratio ``rho``.

    Class k gets ``round(n_max * rho**(-k/(K-1)))`` samples (half-up,
    clamped to 1), so the head keeps ``n_max`` and the tail gets
    ``round(n_max/rho)``.
    """
    if num_classes < 2:
        raise InvalidSpecError("need at least two classes")
    if rho < 1:
        raise InvalidSpecError("imbalance ratio must be >= 1")
    if n_max / rho < 1:
        raise InvalidSpecError("tail class would be empty (n_max/rho < 1)")
    counts = [
        max(1, _round_half_up(n_max * rho ** (-k / (num_classes - 1))))
        for k in range(num_classes)
    ]
    return ClassHistogram(np.array(counts, dtype=np.int64))


def step_counts(
    n_max: int, num_classes: int, rho: float, mu: float
) -> ClassHistogram:
    """Two-level profile: the last ``round(mu*K)`` classes are minority.

    Majority classes keep ``n_max`` samples, minority classes get
    ``round(n_max/rho)``.
    """
    if num_classes < 2:
        raise InvalidSpecError("need at least two classes")
    if rho < 1:
        raise InvalidSpecError("imbalance ratio must be >= 1")
    if not 0 < mu < 1:
        raise InvalidSpecError("mu must be in (0, 1)")
    n_minority_classes = _round_half_up(mu * num_classes)
    if n_minority_classes < 1 or n_minority_classes >= num_classes:
        raise InvalidSpecError(
            f"mu={mu} rounds to {n_minority_classes} minority classes, "
            f"need between 1 and {num_classes - 1}"
        )
    n_min = max(1, _round_half_up(n_max / rho))
    counts = np.full(num_classes, n_max, dtype=np.int64)
    counts[num_classes - n_minority_classes :] = n_min
    return ClassHistogram(counts)


def subsample_indices(
    labels: np.ndarray,
    histogram: ClassHistogram,
    rng: np.random.Generator,
) -> dict[int, np.ndarray]:
    """Pick per-class row indices matching the histogram, uniformly
    without replacement. Returned indices are sorted within each class."""
    out: dict[int, np.ndarray] = {}
    for j, target in enumerate(histogram.counts):
        pool = np.flatnonzero(labels == j)
        if pool.size < target:
            raise InsufficientSamplesError(j, int(target), int(pool.size))
        chosen = rng.choice(pool, size=int(target), replace=False)
        out[j] = np.sort(chosen)
    return out


def take(ds: LabeledDataset, indices: np.ndarray) -> LabeledDataset:
    """Row-subset of a dataset (class count unchanged)."""
    return LabeledDataset(ds.features[indices], ds.labels[indices], ds.num_classes)


def subsample_imbalanced(
    src: LabeledDataset,
    spec: ImbalanceSpec,
    n_max: int | None = None,
) -> LabeledDataset:
    """Subsample ``src`` to the class-size profile of ``spec``.

    ``n_max`` is the head-class size; it defaults to the smallest class
    count of the source so any balanced source is always feasible.
    Deterministic for a fixed ``spec.seed``.
    """
    if n_max is None:
        n_max = int(src.class_counts().min())
    hist = spec.histogram(n_max, src.num_classes)
    rng = component_rng(spec.seed, "subsample")
    chosen = subsample_indices(src.labels, hist, rng)
    order = np.concatenate([chosen[j] for j in range(src.num_classes)])
    return take(src, order)


def synth_gaussian_blobs(
    num_classes: int,
    dim: int,
    n_per_class: int,
    sep: float,
    seed: int,
) -> LabeledDataset:
    """Balanced unit-covariance Gaussian clusters.

    Cluster means sit at mutual Euclidean distance >= ``sep``: on scaled
    random orthonormal directions when the dimension allows, otherwise on
    a circle inside a random 2-d plane.
    """
    if num_classes < 2:
        raise InvalidSpecError("need at least two classes")
    if dim < 2:
        raise InvalidSpecError("need dimension >= 2")
    if sep <= 0:
        raise InvalidSpecError("separation must be positive")
    if n_per_class < 1:
        raise InvalidSpecError("need at least one sample per class")
    rng = component_rng(seed, "blobs")
    basis, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    if num_classes <= dim:
        # Orthonormal directions: pairwise mean distance is sep exactly.
        means = (sep / math.sqrt(2.0)) * basis[:, :num_classes].T
    else:
        radius = sep / (2.0 * math.sin(math.pi / num_classes))
        angles = 2.0 * math.pi * np.arange(num_classes) / num_classes
        circle = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        means = radius * circle @ basis[:, :2].T
    labels = np.repeat(np.arange(num_classes), n_per_class)
    noise = rng.standard_normal((labels.size, dim))
    return LabeledDataset(means[labels] + noise, labels, num_classes)


def save_csv(ds: LabeledDataset, path: str | Path, header: bool = False) -> None:
    """Write ``d`` float columns then the integer label, one row per sample.

    Floats are written with ``repr`` so a round-trip reload is exact.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"x{i}" for i in range(ds.dim)] + ["label"])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def load_csv(
    path: str | Path,
    header: bool = False,
    num_classes: int | None = None,
) -> LabeledDataset:
    """Read a dataset written in the ``save_csv`` layout.

    ``num_classes`` defaults to ``max(label) + 1``. Malformed rows raise
    :class:`ParseError` with the 1-based row number.
    """
    path = Path(path)
    features: list[list[float]] = []
    labels: list[int] = []
    dim: int | None = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for row_no, row in enumerate(reader, start=1):
            if header and row_no == 1:
                continue
            if not row:
                continue
            if len(row) < 2:
                raise ParseError(row_no, "need at least one feature and a label")
            if dim is None:
                dim = len(row) - 1
            elif len(row) - 1 != dim:
                raise ParseError(
                    row_no, f"expected {dim} feature columns, got {len(row) - 1}"
                )
            try:
                features.append([float(v) for v in row[:-1]])
            except ValueError as exc:
                raise ParseError(row_no, f"bad feature value: {exc}") from None
            try:
                labels.append(int(row[-1]))
            except ValueError:
                raise ParseError(row_no, f"bad label {row[-1]!r}") from None
    if not labels:
        raise ParseError(0, "empty file")
    label_arr = np.array(labels, dtype=np.int64)
    if label_arr.min() < 0:
        raise ParseError(0, "negative label")
    k = num_classes if num_classes is not None else int(label_arr.max()) + 1
    return LabeledDataset(np.array(features, dtype=np.float64), label_arr, k)


def split_balanced_eval(
    ds: LabeledDataset,
    n_eval_per_class: int,
    seed: int,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Split off a balanced evaluation set, ``n_eval_per_class`` from
    each class; the remainder is the training pool. Disjoint by
    construction and deterministic for a fixed seed."""
    rng = component_rng(seed, "eval-split")
    eval_idx: list[np.ndarray] = []
    for j in range(ds.num_classes):
        pool = ds.class_indices(j)
        if pool.size < n_eval_per_class:
            raise InsufficientSamplesError(j, n_eval_per_class, int(pool.size))
        eval_idx.append(np.sort(rng.choice(pool, n_eval_per_class, replace=False)))
    eval_rows = np.concatenate(eval_idx)
    mask = np.ones(ds.n, dtype=bool)
    mask[eval_rows] = False
    train_rows = np.flatnonzero(mask)
    return take(ds, train_rows), take(ds, eval_rows)


def save_split_manifest(
    path: str | Path, per_class_indices: dict[int, np.ndarray]
) -> None:
    """Persist selected row indices per class as JSON."""
    payload = {str(j): [int(i) for i in idx] for j, idx in per_class_indices.items()}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_split_manifest(path: str | Path) -> dict[int, np.ndarray]:
    payload = json.loads(Path(path).read_text())
    return {int(j): np.array(idx, dtype=np.int64) for j, idx in payload.items()}
