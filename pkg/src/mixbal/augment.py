"""Mixing rules and oversampling.

A single mini-batch loop underlies every mixer: select partner examples,
draw a mixing factor for the inputs, compute a (possibly different)
mixing factor for the labels, and emit soft-labeled virtual examples.
The mixers differ only in partner selection and in the label rule:

* ``mixup``        — random in-batch partner, label factor equals the
                     input factor.
* ``remix``        — same partners, but the label is hard-assigned to the
                     minority side when its partner dominates it by the
                     configured count ratio.
* ``mamix``        — same partners; the label factor is skewed toward the
                     rarer class by per-class distances ``n**(-omega)``.
* ``smote_mix``    — partner is a same-class nearest neighbor, label kept
                     hard (classic SMOTE interpolation, done per batch).
* ``neighbor_mix`` — partner is a nearest neighbor of any class, soft
                     label.
* ``mamix_remix``  — experimental: remix's hard-relabel branches first,
                     falling through to the mamix factor otherwise.

Classic whole-dataset SMOTE oversampling is also provided for baselines.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import backend
from .data import LabeledDataset
from .errors import InvalidSpecError, MissingIndexError

MIX_METHODS = (
    "mixup",
    "remix",
    "mamix",
    "smote_mix",
    "neighbor_mix",
    "mamix_remix",
)

# Mixers whose partner comes from a uniform in-batch permutation.
_PERMUTATION_METHODS = ("mixup", "remix", "mamix", "mamix_remix")


@dataclass(frozen=True)
class MixerConfig:
    """Hyperparameters shared by all mixers.

    Only the fields relevant to ``method`` are consulted: ``alpha``
    always, ``tau``/``p_majority`` by remix, ``omega`` by mamix,
    ``k_neighbors`` by the SMOTE-style mixers.
    """

    method: str = "mixup"
    alpha: float = 1.0
    omega: float = 0.25
    tau: float = 0.5
    p_majority: float = 3.0
    k_neighbors: int = 5
    per_pair_lambda: bool = False

    def __post_init__(self):
        if self.method not in MIX_METHODS:
            raise InvalidSpecError(
                f"unknown mix method {self.method!r}, expected one of {MIX_METHODS}"
            )
        if self.alpha <= 0:
            raise InvalidSpecError("alpha must be positive")
        if self.omega <= 0:
            raise InvalidSpecError("omega must be positive")
        if not 0 <= self.tau <= 1:
            raise InvalidSpecError("tau must be in [0, 1]")
        if self.p_majority <= 1:
            raise InvalidSpecError("p_majority must be > 1")
        if self.k_neighbors < 1:
            raise InvalidSpecError("k_neighbors must be >= 1")


@dataclass(frozen=True)
class MixedBatch:
    """Virtual examples produced by one mixing step.

    ``soft_labels`` rows are convex combinations of at most two one-hot
    vectors and sum to one. ``lambda_x`` is the batch's input factor (an
    array in per-pair mode); ``lambda_y`` is per row.
    """

    inputs: np.ndarray
    soft_labels: np.ndarray
    lambda_x: float | np.ndarray
    lambda_y: np.ndarray


class NeighborIndex:
    """Exact k-nearest-neighbor lists under Euclidean distance.

    Neighbor lists exclude the query point itself, are sorted by
    nondecreasing distance with ties broken by ascending index, and are
    optionally restricted to same-class points. Build once, read freely.
    """

    def __init__(self, neighbor_ids: np.ndarray, k: int, same_class: bool):
        self.neighbor_ids = neighbor_ids  # [n, k], -1 where unavailable
        self.k = k
        self.same_class = same_class

    @classmethod
    def build(
        cls,
        features: np.ndarray,
        k: int,
        labels: np.ndarray | None = None,
    ) -> "NeighborIndex":
        """Brute-force index over all rows; pass ``labels`` to restrict
        neighbor lists to same-class points."""
        n = features.shape[0]
        ids = np.full((n, k), -1, dtype=np.int64)
        if labels is None:
            cls._fill(features, np.arange(n), ids, k)
        else:
            for label in np.unique(labels):
                members = np.flatnonzero(labels == label)
                cls._fill(features[members], members, ids, k)
        return cls(ids, k, same_class=labels is not None)

    @staticmethod
    def _fill(block: np.ndarray, members: np.ndarray, ids: np.ndarray, k: int):
        dist = backend.kernels().pairwise_sqdist(
            np.ascontiguousarray(block), np.ascontiguousarray(block)
        )
        m = members.size
        take = min(k, m - 1)
        if take <= 0:
            return
        local = np.arange(m)
        # lexsort: primary key distance, secondary key ascending index.
        order = np.lexsort((np.broadcast_to(local, (m, m)), dist), axis=1)
        for row in range(m):
            picked = order[row][order[row] != row][:take]
            ids[members[row], :take] = members[picked]

    def neighbors_of(self, i: int) -> np.ndarray:
        """Valid neighbor ids of example ``i`` (may be shorter than k)."""
        row = self.neighbor_ids[i]
        return row[row >= 0]


def sample_lambda_x(
    alpha: float, rng: np.random.Generator, size: int | None = None
) -> float | np.ndarray:
    """Draw the input mixing factor from Beta(alpha, alpha), kept in [0, 1)."""
    if alpha <= 0:
        raise InvalidSpecError("alpha must be positive")
    draw = rng.beta(alpha, alpha, size=size)
    # Beta support is closed at 1.0 in floating point; the factor must stay below it.
    return np.minimum(draw, 1.0 - 1e-12) if size else min(float(draw), 1.0 - 1e-12)


def select_pairs(
    batch_ids: np.ndarray,
    method: str,
    rng: np.random.Generator,
    index: NeighborIndex | None = None,
) -> np.ndarray:
    """Choose the partner ``j`` for every batch member ``i``.

    Returns an ``[M, 2]`` array of dataset row-ids. Permutation-based
    mixers pair within the batch; the SMOTE-style mixers draw the partner
    uniformly from the precomputed neighbor lists. A point with no
    neighbor (singleton class) is paired with itself.
    """
    batch_ids = np.asarray(batch_ids, dtype=np.int64)
    if method in _PERMUTATION_METHODS:
        partners = batch_ids[rng.permutation(batch_ids.size)]
    elif method in ("smote_mix", "neighbor_mix"):
        if index is None:
            raise MissingIndexError(f"{method} needs a prebuilt neighbor index")
        partners = np.empty_like(batch_ids)
        for pos, i in enumerate(batch_ids):
            cands = index.neighbors_of(int(i))
            partners[pos] = i if cands.size == 0 else rng.choice(cands)
    else:
        raise InvalidSpecError(f"unknown mix method {method!r}")
    return np.stack([batch_ids, partners], axis=1)


def lambda_y_mixup(lambda_x: float) -> float:
    """Plain mixing: labels use the input factor unchanged."""
    return lambda_x


def lambda_y_remix(
    lambda_x: float, n_i: int, n_j: int, tau: float, p_majority: float
) -> float:
    """Hard-relabel toward the minority side when its partner dominates.

    The label collapses to the partner's class (0) when class i
    outnumbers class j by the factor ``p_majority`` and the input factor
    is small, symmetrically to class i (1); otherwise it follows the
    input factor.
    """
    ratio = n_i / n_j
    if ratio >= p_majority and lambda_x < tau:
        return 0.0
    if ratio <= 1.0 / p_majority and 1.0 - lambda_x < tau:
        return 1.0
    return lambda_x


def mamix_etas(n_i: int, n_j: int, omega: float) -> tuple[float, float]:
    """Per-class boundary distances ``n**(-omega)`` for a mixed pair."""
    if n_i < 1 or n_j < 1:
        raise InvalidSpecError("class counts must be >= 1")
    if omega <= 0:
        raise InvalidSpecError("omega must be positive")
    return float(n_i) ** -omega, float(n_j) ** -omega


def lambda_y_mamix(lambda_x: float, eta_i: float, eta_j: float) -> float:
    """Label factor that crosses 0.5 at the margin-balanced mixing point.

    The balance point is ``t = eta_j / (eta_i + eta_j)``; the factor
    interpolates linearly 0 -> 0.5 on [0, t] and 0.5 -> 1 on [t, 1], so a
    rarer class i (larger eta_i, smaller t) gets more label mass than the
    input factor alone would give it.
    """
    t = eta_j / (eta_i + eta_j)
    if lambda_x >= t:
        # Written in terms of t so lambda_x == t lands on 0.5 exactly.
        value = 1.0 - 0.5 * (1.0 - lambda_x) / (1.0 - t)
    else:
        value = 0.5 * lambda_x / t
    return min(1.0, max(0.0, value))


def lambda_y_mamix_remix(
    lambda_x: float,
    n_i: int,
    n_j: int,
    tau: float,
    p_majority: float,
    omega: float,
) -> float:
    """Experimental composition: remix's hard branches, mamix otherwise."""
    ratio = n_i / n_j
    if ratio >= p_majority and lambda_x < tau:
        return 0.0
    if ratio <= 1.0 / p_majority and 1.0 - lambda_x < tau:
        return 1.0
    return lambda_y_mamix(lambda_x, *mamix_etas(n_i, n_j, omega))


def _lambda_y_for_pair(
    lambda_x: float,
    y_i: int,
    y_j: int,
    self_pair: bool,
    config: MixerConfig,
    class_counts: np.ndarray,
) -> float:
    if config.method == "smote_mix":
        return 1.0
    if config.method in ("mixup", "neighbor_mix") or self_pair:
        return lambda_x
    n_i = int(class_counts[y_i])
    n_j = int(class_counts[y_j])
    if config.method == "remix":
        return lambda_y_remix(lambda_x, n_i, n_j, config.tau, config.p_majority)
    if config.method == "mamix":
        return lambda_y_mamix(lambda_x, *mamix_etas(n_i, n_j, config.omega))
    return lambda_y_mamix_remix(
        lambda_x, n_i, n_j, config.tau, config.p_majority, config.omega
    )


def mix_batch(
    ds: LabeledDataset,
    pairs: np.ndarray,
    lambda_x: float | np.ndarray,
    config: MixerConfig,
    class_counts: np.ndarray | None = None,
) -> MixedBatch:
    """Build the virtual examples for one batch of selected pairs.

    Inputs always interpolate with the input factor; soft labels use the
    per-method label factor. ``class_counts`` are the training-set counts
    fixed before training (required by remix/mamix).
    """
    if class_counts is None:
        class_counts = ds.class_counts()
    i_ids = pairs[:, 0]
    j_ids = pairs[:, 1]
    m = pairs.shape[0]
    lam_x = np.broadcast_to(np.asarray(lambda_x, dtype=np.float64), (m,))
    inputs = lam_x[:, None] * ds.features[i_ids] + (1.0 - lam_x)[:, None] * ds.features[j_ids]
    lam_y = np.empty(m)
    soft = np.zeros((m, ds.num_classes))
    for row in range(m):
        y_i = int(ds.labels[i_ids[row]])
        y_j = int(ds.labels[j_ids[row]])
        ly = _lambda_y_for_pair(
            float(lam_x[row]), y_i, y_j, i_ids[row] == j_ids[row], config, class_counts
        )
        lam_y[row] = ly
        soft[row, y_i] += ly
        soft[row, y_j] += 1.0 - ly
    return MixedBatch(
        inputs=inputs,
        soft_labels=soft,
        lambda_x=lambda_x if config.per_pair_lambda else float(np.asarray(lambda_x).flat[0]),
        lambda_y=lam_y,
    )


def smote_oversample(
    train: LabeledDataset, k: int, rng: np.random.Generator
) -> LabeledDataset:
    """Oversample every class up to the majority count.

    Each synthetic point interpolates a uniformly chosen class member
    toward one of its k same-class nearest neighbors by a Uniform[0, 1)
    factor. Singleton classes are replicated verbatim with a warning.
    Original rows are retained and come first.
    """
    if k < 1:
        raise InvalidSpecError("k must be >= 1")
    counts = train.class_counts()
    target = int(counts.max())
    index = NeighborIndex.build(train.features, k, labels=train.labels)
    new_rows: list[np.ndarray] = []
    new_labels: list[int] = []
    for j in range(train.num_classes):
        deficit = target - int(counts[j])
        if deficit == 0:
            continue
        members = train.class_indices(j)
        if members.size == 1:
            warnings.warn(
                f"class {j} has a single example; replicating it {deficit} times",
                stacklevel=2,
            )
            new_rows.extend([train.features[members[0]].copy()] * deficit)
            new_labels.extend([j] * deficit)
            continue
        bases = rng.choice(members, size=deficit, replace=True)
        for base in bases:
            neighbor = int(rng.choice(index.neighbors_of(int(base))))
            u = rng.random()
            point = train.features[base] + u * (
                train.features[neighbor] - train.features[base]
            )
            new_rows.append(point)
            new_labels.append(j)
    if not new_rows:
        return train
    features = np.vstack([train.features, np.array(new_rows)])
    labels = np.concatenate([train.labels, np.array(new_labels, dtype=np.int64)])
    return LabeledDataset(features, labels, train.num_classes)
