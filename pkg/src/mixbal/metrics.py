"""Margin statistics and balanced evaluation metrics.

Everything here is computed from logits, labels, and training-set class
counts: per-example and per-class margins, the count-weighted gap
between majority and minority margins, its sign decomposition, the
least-squares distance of the margin profile from the n**(-1/4)
reference curve, rank correlation, and per-class accuracy.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantInputError,
    DegenerateSplitError,
    EmptyClassError,
    InvalidSpecError,
)


@dataclass(frozen=True)
class MarginReport:
    """Margin and accuracy summary of one trained model on one eval set."""

    per_class_margin: np.ndarray
    margin_gap: float
    majority_mask: np.ndarray
    decomposition: dict[str, float | None]
    l2_fit_error: float
    balanced_accuracy: float
    per_class_accuracy: np.ndarray

    def to_dict(self) -> dict:
        return {
            "per_class_margin": [float(v) for v in self.per_class_margin],
            "margin_gap": float(self.margin_gap),
            "majority_mask": [bool(v) for v in self.majority_mask],
            "decomposition": {
                key: (None if value is None else float(value))
                for key, value in self.decomposition.items()
            },
            "l2_fit_error": float(self.l2_fit_error),
            "balanced_accuracy": float(self.balanced_accuracy),
            "per_class_accuracy": [float(v) for v in self.per_class_accuracy],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MarginReport":
        return cls(
            per_class_margin=np.array(payload["per_class_margin"], dtype=np.float64),
            margin_gap=float(payload["margin_gap"]),
            majority_mask=np.array(payload["majority_mask"], dtype=bool),
            decomposition=dict(payload["decomposition"]),
            l2_fit_error=float(payload["l2_fit_error"]),
            balanced_accuracy=float(payload["balanced_accuracy"]),
            per_class_accuracy=np.array(
                payload["per_class_accuracy"], dtype=np.float64
            ),
        )


def example_margin(logits_row: np.ndarray, label: int) -> float:
    """True-class score minus the best other-class score."""
    row = np.asarray(logits_row, dtype=np.float64)
    if row.size < 2:
        raise InvalidSpecError("need at least two classes")
    others = np.delete(row, label)
    return float(row[label] - others.max())


def example_margins(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Vectorized per-example margins."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    m = logits.shape[0]
    true_scores = logits[np.arange(m), labels]
    masked = logits.copy()
    masked[np.arange(m), labels] = -np.inf
    return true_scores - masked.max(axis=1)


def class_margins(
    logits: np.ndarray, labels: np.ndarray, num_classes: int
) -> np.ndarray:
    """Mean example margin within each class."""
    labels = np.asarray(labels, dtype=np.int64)
    margins = example_margins(logits, labels)
    out = np.empty(num_classes)
    for j in range(num_classes):
        mask = labels == j
        if not mask.any():
            raise EmptyClassError(f"class {j} absent from the evaluation set")
        out[j] = margins[mask].mean()
    return out


def majority_split(train_counts: np.ndarray) -> np.ndarray:
    """Classes holding strictly more than 1/K of the training samples."""
    counts = np.asarray(train_counts, dtype=np.float64)
    return counts > counts.sum() / counts.size


def margin_gap(
    per_class_margin: np.ndarray,
    train_counts: np.ndarray,
    majority_mask: np.ndarray,
) -> float:
    """Count-weighted mean majority margin minus count-weighted mean
    minority margin; lower (more negative) means minorities enjoy the
    larger margins."""
    counts = np.asarray(train_counts, dtype=np.float64)
    margins = np.asarray(per_class_margin, dtype=np.float64)
    mask = np.asarray(majority_mask, dtype=bool)
    if not mask.any() or mask.all():
        raise DegenerateSplitError("need at least one majority and one minority class")
    maj = np.average(margins[mask], weights=counts[mask])
    mino = np.average(margins[~mask], weights=counts[~mask])
    return float(maj - mino)


def margin_decomposition(
    margins: np.ndarray,
    labels: np.ndarray,
    majority_mask: np.ndarray,
) -> dict[str, float | None]:
    """Mean negative and nonnegative margin within each group.

    Examples are pooled across the classes of a group; an empty part is
    reported as None.
    """
    margins = np.asarray(margins, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(majority_mask, dtype=bool)
    in_majority = mask[labels]
    out: dict[str, float | None] = {}
    for group, selector in (("majority", in_majority), ("minority", ~in_majority)):
        vals = margins[selector]
        neg = vals[vals < 0]
        pos = vals[vals >= 0]
        out[f"{group}_negative"] = float(neg.mean()) if neg.size else None
        out[f"{group}_nonnegative"] = float(pos.mean()) if pos.size else None
    return out


def theoretical_margins(train_counts: np.ndarray, c: float = 1.0) -> np.ndarray:
    """Reference per-class margins ``c * n**(-1/4)``."""
    counts = np.asarray(train_counts, dtype=np.float64)
    if (counts < 1).any():
        raise InvalidSpecError("class counts must be >= 1")
    return c * counts**-0.25


def l2_fit_error(
    per_class_margin: np.ndarray, train_counts: np.ndarray
) -> float:
    """Residual of scaling the practical margins onto the reference curve.

    Fits the single scalar ``a`` minimizing ``sum((a*margin - t)**2)``
    with ``t = n**(-1/4)`` and returns the minimized sum. All-zero
    margins leave the fit undefined; then ``a=0`` and the error is
    ``sum(t**2)``.
    """
    margins = np.asarray(per_class_margin, dtype=np.float64)
    t = theoretical_margins(train_counts)
    denom = float(margins @ margins)
    a = 0.0 if denom == 0.0 else float(margins @ t) / denom
    resid = a * margins - t
    return float(resid @ resid)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; ties receive the average of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(xs: np.ndarray, ys: np.ndarray) -> float:
    """Rank correlation: Pearson correlation of average-ranked data."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise InvalidSpecError("inputs must be 1-d sequences of equal length")
    if xs.size < 3:
        raise InvalidSpecError("need at least three observations")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise ConstantInputError("rank correlation undefined for constant input")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))


def _predictions(logits: np.ndarray) -> np.ndarray:
    return np.argmax(np.asarray(logits, dtype=np.float64), axis=1)


def per_class_accuracy(
    logits: np.ndarray, labels: np.ndarray, num_classes: int | None = None
) -> np.ndarray:
    """Fraction of correct predictions within each class."""
    labels = np.asarray(labels, dtype=np.int64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    preds = _predictions(logits)
    out = np.empty(num_classes)
    for j in range(num_classes):
        mask = labels == j
        if not mask.any():
            raise EmptyClassError(f"class {j} absent from the evaluation set")
        out[j] = np.mean(preds[mask] == j)
    return out


def balanced_accuracy(
    logits: np.ndarray, labels: np.ndarray, num_classes: int | None = None
) -> float:
    """Unweighted mean of per-class accuracies.

    Warns when the evaluation set is not balanced; the macro average is
    still returned.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=num_classes)
    if counts.min() != counts.max():
        warnings.warn(
            "evaluation set is not balanced; reporting the macro average",
            stacklevel=2,
        )
    return float(per_class_accuracy(logits, labels, num_classes).mean())


def compute_margin_report(
    logits: np.ndarray,
    eval_labels: np.ndarray,
    train_counts: np.ndarray,
) -> MarginReport:
    """Full margin/accuracy summary for one model.

    The majority split and all count weights use the training-set counts;
    margins and accuracies are measured on the evaluation logits.
    """
    train_counts = np.asarray(train_counts, dtype=np.int64)
    num_classes = train_counts.size
    margins = class_margins(logits, eval_labels, num_classes)
    mask = majority_split(train_counts)
    gap = margin_gap(margins, train_counts, mask)
    decomposition = margin_decomposition(
        example_margins(logits, eval_labels), eval_labels, mask
    )
    return MarginReport(
        per_class_margin=margins,
        margin_gap=gap,
        majority_mask=mask,
        decomposition=decomposition,
        l2_fit_error=l2_fit_error(margins, train_counts),
        balanced_accuracy=balanced_accuracy(logits, eval_labels, num_classes),
        per_class_accuracy=per_class_accuracy(logits, eval_labels, num_classes),
    )
