"""Small classifiers trained with SGD under soft-label or margin losses.

Two architectures (softmax linear, one-hidden-layer ReLU MLP) with
hand-written gradients, a per-class margin loss for hard labels, the
deferred re-weighting schedule, and a warm-up/step learning-rate policy.
Training is fully deterministic for a fixed seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import backend
from .augment import MixerConfig, NeighborIndex, mix_batch, sample_lambda_x, select_pairs
from .data import LabeledDataset
from .errors import DivergenceError, InvalidSpecError, ShapeMismatchError
from .rng import component_rng

ARCHITECTURES = ("linear", "mlp")
LOSSES = ("soft_ce", "ldam")
REWEIGHT_SCHEMES = ("none", "inverse_freq", "class_balanced")


@dataclass
class ModelParams:
    """Weights and biases for one architecture.

    ``layers`` holds (weight, bias) pairs chaining input dim to the
    number of classes: one pair for linear, two for the MLP.
    """

    architecture: str
    layers: list[tuple[np.ndarray, np.ndarray]]

    @property
    def dim(self) -> int:
        return int(self.layers[0][0].shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.layers[-1][0].shape[1])

    @property
    def hidden(self) -> int | None:
        if self.architecture == "linear":
            return None
        return int(self.layers[0][0].shape[1])

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.architecture, [(w.copy(), b.copy()) for w, b in self.layers]
        )


@dataclass(frozen=True)
class TrainConfig:
    """The full training recipe."""

    epochs: int
    batch_size: int = 128
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 2e-4
    warmup_epochs: int = 0
    decay_epochs: tuple[int, ...] = ()
    decay_factor: float = 0.01
    drw_epoch: int | None = None
    architecture: str = "mlp"
    hidden: int = 64
    loss: str = "soft_ce"
    ldam_max_margin: float = 0.5
    ldam_scale: float = 30.0
    reweight: str = "none"
    cb_beta: float = 0.9999
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidSpecError("epochs must be >= 1")
        if self.batch_size < 1:
            raise InvalidSpecError("batch_size must be >= 1")
        if self.architecture not in ARCHITECTURES:
            raise InvalidSpecError(f"unknown architecture {self.architecture!r}")
        if self.loss not in LOSSES:
            raise InvalidSpecError(f"unknown loss {self.loss!r}")
        if self.reweight not in REWEIGHT_SCHEMES:
            raise InvalidSpecError(f"unknown reweight scheme {self.reweight!r}")
        if self.drw_epoch is not None and not 0 <= self.drw_epoch < self.epochs:
            raise InvalidSpecError("drw_epoch must lie within [0, epochs)")
        if self.decay_epochs and not 0 < self.decay_factor < 1:
            raise InvalidSpecError("decay_factor must be in (0, 1)")
        object.__setattr__(self, "decay_epochs", tuple(self.decay_epochs))


def init_params(
    architecture: str,
    dim: int,
    num_classes: int,
    hidden: int,
    rng: np.random.Generator,
) -> ModelParams:
    """Per-layer uniform initialization in +-1/sqrt(fan_in)."""
    if architecture not in ARCHITECTURES:
        raise InvalidSpecError(f"unknown architecture {architecture!r}")
    shapes = (
        [(dim, num_classes)]
        if architecture == "linear"
        else [(dim, hidden), (hidden, num_classes)]
    )
    layers = []
    for fan_in, fan_out in shapes:
        bound = 1.0 / math.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = rng.uniform(-bound, bound, size=fan_out)
        layers.append((w, b))
    return ModelParams(architecture, layers)


def _check_inputs(params: ModelParams, inputs: np.ndarray) -> np.ndarray:
    inputs = np.ascontiguousarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != params.dim:
        raise ShapeMismatchError(
            f"inputs of dim {inputs.shape} do not match model dim {params.dim}"
        )
    return inputs


def _forward(params: ModelParams, inputs: np.ndarray):
    """Returns (hidden activations or None, logits)."""
    k = backend.kernels()
    if params.architecture == "linear":
        (w, b) = params.layers[0]
        return None, k.linear_forward(inputs, np.ascontiguousarray(w), np.ascontiguousarray(b))
    (w1, b1), (w2, b2) = params.layers
    return k.mlp_forward(
        inputs,
        np.ascontiguousarray(w1),
        np.ascontiguousarray(b1),
        np.ascontiguousarray(w2),
        np.ascontiguousarray(b2),
    )


def forward_logits(params: ModelParams, inputs: np.ndarray) -> np.ndarray:
    """Pre-softmax class scores, shape [M, K]."""
    inputs = _check_inputs(params, inputs)
    return _forward(params, inputs)[1]


def _backward(params, inputs, hidden, dlogits):
    k = backend.kernels()
    dlogits = np.ascontiguousarray(dlogits)
    if params.architecture == "linear":
        dw, db = k.linear_backward(inputs, dlogits)
        return [(dw, db)]
    w2 = np.ascontiguousarray(params.layers[1][0])
    dw1, db1, dw2, db2 = k.mlp_backward(inputs, hidden, w2, dlogits)
    return [(dw1, db1), (dw2, db2)]


def soft_cross_entropy(
    logits: np.ndarray,
    soft_labels: np.ndarray,
    class_weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Mean weighted cross-entropy against soft targets.

    Each row's weight is the soft-label-weighted average of the class
    weights (1 when absent). Returns the loss and its gradient with
    respect to the logits.
    """
    logits = np.ascontiguousarray(logits, dtype=np.float64)
    soft_labels = np.ascontiguousarray(soft_labels, dtype=np.float64)
    if logits.shape != soft_labels.shape:
        raise ShapeMismatchError("logits and soft labels must share a shape")
    row_sums = soft_labels.sum(axis=1)
    if np.abs(row_sums - 1.0).max() > 1e-9:
        raise InvalidSpecError("soft label rows must sum to 1")
    m = logits.shape[0]
    if class_weights is None:
        row_w = np.ones(m)
    else:
        row_w = soft_labels @ np.asarray(class_weights, dtype=np.float64)
    loss_sum, dlogits = backend.kernels().softmax_xent(
        logits, soft_labels, np.ascontiguousarray(row_w)
    )
    return loss_sum / m, dlogits / m


def ldam_margins(class_counts: np.ndarray, max_margin: float) -> np.ndarray:
    """Per-class margins proportional to n**(-1/4), scaled so the rarest
    class gets exactly ``max_margin``."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if (counts < 1).any():
        raise InvalidSpecError("class counts must be >= 1")
    margins = counts ** -0.25
    return margins * (max_margin / margins.max())


def ldam_loss(
    logits: np.ndarray,
    hard_labels: np.ndarray,
    class_counts: np.ndarray,
    max_margin: float = 0.5,
    scale: float = 30.0,
    class_weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Margin loss: subtract the true class's margin from its logit, then
    scaled weighted cross-entropy. Hard integer labels only."""
    hard_labels = np.asarray(hard_labels)
    if hard_labels.ndim != 1 or not np.issubdtype(hard_labels.dtype, np.integer):
        raise InvalidSpecError("margin loss needs hard integer labels")
    logits = np.ascontiguousarray(logits, dtype=np.float64)
    m, k = logits.shape
    margins = ldam_margins(class_counts, max_margin)
    adjusted = logits.copy()
    adjusted[np.arange(m), hard_labels] -= margins[hard_labels]
    onehot = np.zeros((m, k))
    onehot[np.arange(m), hard_labels] = 1.0
    if class_weights is None:
        row_w = np.ones(m)
    else:
        row_w = np.asarray(class_weights, dtype=np.float64)[hard_labels]
    loss_sum, dscaled = backend.kernels().softmax_xent(
        np.ascontiguousarray(adjusted * scale), onehot, np.ascontiguousarray(row_w)
    )
    return loss_sum / m, dscaled * (scale / m)


def drw_weights(
    class_counts: np.ndarray,
    epoch: int,
    drw_epoch: int | None,
    scheme: str,
    cb_beta: float = 0.9999,
) -> np.ndarray:
    """Per-class loss weights for the deferred re-weighting schedule.

    Uniform before ``drw_epoch`` (or when the scheme is 'none' or the
    epoch is unset); afterwards inverse-frequency or effective-number
    weights, renormalized to mean one.
    """
    counts = np.asarray(class_counts, dtype=np.float64)
    if scheme not in REWEIGHT_SCHEMES:
        raise InvalidSpecError(f"unknown reweight scheme {scheme!r}")
    if scheme == "none" or drw_epoch is None or epoch < drw_epoch:
        return np.ones(counts.size)
    if scheme == "inverse_freq":
        w = 1.0 / counts
    else:
        w = (1.0 - cb_beta) / (1.0 - cb_beta**counts)
    return w / w.mean()


def lr_at(epoch: int, config: TrainConfig) -> float:
    """Learning rate: linear ramp over the warm-up epochs, then a
    cumulative multiplicative decay at each decay epoch."""
    if config.warmup_epochs > 0 and epoch < config.warmup_epochs:
        lr = config.lr * (epoch + 1) / config.warmup_epochs
    else:
        lr = config.lr
    for de in config.decay_epochs:
        if epoch >= de:
            lr *= config.decay_factor
    return lr


def _batch_grads(params, x, mixer_batch, hard_y, onehot, counts, config, weights):
    hidden, logits = _forward(params, x)
    if config.loss == "ldam":
        loss, dlogits = ldam_loss(
            logits,
            hard_y,
            counts,
            config.ldam_max_margin,
            config.ldam_scale,
            weights,
        )
    else:
        targets = mixer_batch if mixer_batch is not None else onehot[hard_y]
        loss, dlogits = soft_cross_entropy(logits, targets, weights)
    grads = _backward(params, x, hidden, dlogits)
    return loss, grads


def train(
    train_ds: LabeledDataset,
    mixer: MixerConfig | None,
    config: TrainConfig,
    eval_ds: LabeledDataset | None = None,
    fixed_lambda_x: float | None = None,
) -> tuple[ModelParams, list[dict]]:
    """SGD training; one mixing step per batch when a mixer is given.

    Per batch: select partner pairs, draw the input mixing factor, build
    the soft-labeled virtual batch, evaluate the loss under the epoch's
    re-weighting, and apply an SGD-with-momentum update with weight
    decay. ``fixed_lambda_x`` pins the mixing factor (ablation hook;
    at 1.0 a mixing epoch reduces to plain ERM).

    History records per-epoch mean loss, learning rate, and balanced
    evaluation accuracy when ``eval_ds`` is given.
    """
    if mixer is not None and config.loss == "ldam":
        raise InvalidSpecError("margin loss needs hard labels; disable the mixer")
    counts = train_ds.class_counts()
    if (counts == 0).any():
        raise InvalidSpecError("every class needs at least one training example")
    params = init_params(
        config.architecture,
        train_ds.dim,
        train_ds.num_classes,
        config.hidden,
        component_rng(config.seed, "init"),
    )
    shuffle_rng = component_rng(config.seed, "shuffle")
    pair_rng = component_rng(config.seed, "pairs")
    lambda_rng = component_rng(config.seed, "lambda")
    index = None
    if mixer is not None and mixer.method in ("smote_mix", "neighbor_mix"):
        index = NeighborIndex.build(
            train_ds.features,
            mixer.k_neighbors,
            labels=train_ds.labels if mixer.method == "smote_mix" else None,
        )
    onehot = np.eye(train_ds.num_classes)
    velocity = [
        (np.zeros_like(w), np.zeros_like(b)) for w, b in params.layers
    ]
    history: list[dict] = []
    for epoch in range(config.epochs):
        lr = lr_at(epoch, config)
        weights = None
        if config.reweight != "none":
            weights = drw_weights(
                counts, epoch, config.drw_epoch, config.reweight, config.cb_beta
            )
        perm = shuffle_rng.permutation(train_ds.n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, train_ds.n, config.batch_size):
            batch = perm[start : start + config.batch_size]
            if mixer is not None:
                pairs = select_pairs(batch, mixer.method, pair_rng, index)
                if fixed_lambda_x is not None:
                    lam = fixed_lambda_x
                elif mixer.per_pair_lambda:
                    lam = sample_lambda_x(mixer.alpha, lambda_rng, size=batch.size)
                else:
                    lam = sample_lambda_x(mixer.alpha, lambda_rng)
                mixed = mix_batch(train_ds, pairs, lam, mixer, counts)
                x = np.ascontiguousarray(mixed.inputs)
                loss, grads = _batch_grads(
                    params, x, mixed.soft_labels, None, onehot, counts, config, weights
                )
            else:
                x = train_ds.features[batch]
                y = train_ds.labels[batch]
                loss, grads = _batch_grads(
                    params, x, None, y, onehot, counts, config, weights
                )
            if not math.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch {n_batches}"
                )
            for (w, b), (vw, vb), (gw, gb) in zip(params.layers, velocity, grads):
                vw *= config.momentum
                vw += gw + config.weight_decay * w
                w -= lr * vw
                vb *= config.momentum
                vb += gb + config.weight_decay * b
                b -= lr * vb
            epoch_loss += loss
            n_batches += 1
        entry = {"epoch": epoch, "loss": epoch_loss / n_batches, "lr": lr}
        if eval_ds is not None:
            preds = predict(params, eval_ds.features)
            per_class = [
                float(np.mean(preds[eval_ds.labels == j] == j))
                for j in range(eval_ds.num_classes)
            ]
            entry["eval_balanced_accuracy"] = float(np.mean(per_class))
        history.append(entry)
    return params, history


def predict(params: ModelParams, inputs: np.ndarray) -> np.ndarray:
    """Argmax labels; ties go to the lowest class id."""
    return np.argmax(forward_logits(params, inputs), axis=1)


def export_logits(params: ModelParams, ds: LabeledDataset) -> np.ndarray:
    """Logits for every dataset row, [n, K]."""
    return forward_logits(params, ds.features)


def save_checkpoint(params: ModelParams, path: str | Path) -> None:
    """JSON checkpoint: architecture descriptor plus row-major weights."""
    payload = {
        "architecture": params.architecture,
        "dim": params.dim,
        "num_classes": params.num_classes,
        "hidden": params.hidden,
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()} for w, b in params.layers
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_checkpoint(path: str | Path) -> ModelParams:
    payload = json.loads(Path(path).read_text())
    layers = [
        (
            np.array(layer["weights"], dtype=np.float64),
            np.array(layer["bias"], dtype=np.float64),
        )
        for layer in payload["layers"]
    ]
    return ModelParams(payload["architecture"], layers)


def save_logits_csv(logits: np.ndarray, path: str | Path) -> None:
    """n rows by K columns, floats written with repr for exact reload."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.atleast_2d(logits):
            writer.writerow([repr(float(v)) for v in row])


def load_logits_csv(path: str | Path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return np.array(rows, dtype=np.float64)
