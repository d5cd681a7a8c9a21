"""Numpy implementations of the hot kernels.

This is the fallback backend; ``mixbal._kernels`` (Cython) provides the
same functions with loop-based implementations. Both operate on float64
C-contiguous arrays and are drop-in interchangeable — see
``mixbal.backend``.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

NAME = "python"


def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map: x @ w + b."""
    return x @ w + b


def mlp_forward(x, w1, b1, w2, b2):
    """One ReLU hidden layer; returns (hidden activations, logits)."""
    h = np.maximum(x @ w1 + b1, 0.0)
    z = h @ w2 + b2
    return h, z


def softmax_xent(logits, targets, row_weights):
    """Weighted softmax cross-entropy against soft targets.

    Returns the unnormalized loss sum over rows and the per-row gradient
    with respect to the logits, ``w_r * (softmax(z_r) - t_r)``. Callers
    divide by the batch size.
    """
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    sum_exp = exp.sum(axis=1, keepdims=True)
    log_p = shifted - np.log(sum_exp)
    loss = float(np.sum(row_weights * -(targets * log_p).sum(axis=1)))
    dlogits = row_weights[:, None] * (exp / sum_exp - targets)
    return loss, dlogits


def linear_backward(x, dlogits):
    """Gradients of an affine layer: (x^T dz, column sums of dz)."""
    return x.T @ dlogits, dlogits.sum(axis=0)


def mlp_backward(x, h, w2, dlogits):
    """Backprop through ReLU MLP; returns (dw1, db1, dw2, db2)."""
    dw2 = h.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dh = dlogits @ w2.T
    dh[h <= 0.0] = 0.0
    dw1 = x.T @ dh
    db1 = dh.sum(axis=0)
    return dw1, db1, dw2, db2


def pairwise_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between all rows of a and b.

    Accumulates coordinate-wise squared differences sequentially (cdist
    does), so results are bit-identical to a naive two-level loop; this
    keeps neighbor ordering reproducible against brute-force references.
    """
    return cdist(a, b, metric="sqeuclidean")
