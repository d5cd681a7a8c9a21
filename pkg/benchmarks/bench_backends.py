#!/usr/bin/env python3
"""Time the numpy and compiled kernel backends side by side.

Every hot kernel runs on identical synthetic batches under each
available backend, followed by one short end-to-end training run.
Usage:

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --batch 512 --repeats 300
"""

import argparse
import time

import numpy as np

from mixbal import backend
from mixbal.augment import MixerConfig
from mixbal.data import ImbalanceSpec, subsample_imbalanced, synth_gaussian_blobs
from mixbal.model import TrainConfig, train


def _time(fn, repeats):
    fn()  # warm up caches and lazy imports
    started = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - started) / repeats


def kernel_cases(batch, dim, hidden, classes, seed):
    """(name, kernels -> result) pairs sharing one set of random inputs."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(batch, dim))
    w1 = rng.normal(size=(dim, hidden), scale=dim**-0.5)
    b1 = rng.normal(size=hidden)
    w2 = rng.normal(size=(hidden, classes), scale=hidden**-0.5)
    b2 = rng.normal(size=classes)
    hidden_acts = np.maximum(x @ w1 + b1, 0.0)
    logits = hidden_acts @ w2 + b2
    targets = rng.random((batch, classes))
    targets /= targets.sum(axis=1, keepdims=True)
    row_weights = rng.uniform(0.5, 2.0, batch)
    dlogits = rng.normal(size=(batch, classes))
    dhidden = rng.normal(size=(batch, hidden))
    points = rng.normal(size=(400, dim))
    return [
        ("linear_forward", lambda k: k.linear_forward(x, w1, b1)),
        ("mlp_forward", lambda k: k.mlp_forward(x, w1, b1, w2, b2)),
        ("softmax_xent", lambda k: k.softmax_xent(logits, targets, row_weights)),
        ("linear_backward", lambda k: k.linear_backward(x, dhidden)),
        ("mlp_backward", lambda k: k.mlp_backward(x, hidden_acts, w2, dlogits)),
        ("pairwise_sqdist", lambda k: k.pairwise_sqdist(points, points)),
    ]


def training_case(seed):
    """A short but realistic imbalanced mixing run."""
    source = synth_gaussian_blobs(10, 16, 400, 3.0, seed)
    ds = subsample_imbalanced(
        source, ImbalanceSpec("long_tailed", rho=50.0, seed=seed), n_max=400
    )
    mixer = MixerConfig(method="mamix", alpha=1.0)
    config = TrainConfig(
        epochs=20,
        warmup_epochs=2,
        decay_epochs=(15,),
        drw_epoch=15,
        reweight="class_balanced",
        seed=seed,
    )
    return lambda: train(ds, mixer, config)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=256, help="kernel batch size")
    parser.add_argument("--dim", type=int, default=16, help="input dimension")
    parser.add_argument("--hidden", type=int, default=64, help="hidden width")
    parser.add_argument("--classes", type=int, default=10, help="class count")
    parser.add_argument("--repeats", type=int, default=200, help="timed repeats per kernel")
    parser.add_argument("--seed", type=int, default=0, help="input data seed")
    args = parser.parse_args()

    available = backend.available()
    names = [n for n in ("python", "cython") if n in available]
    if len(names) < 2:
        print(f"only the {names[0]} backend is importable; nothing to compare")
    cases = kernel_cases(args.batch, args.dim, args.hidden, args.classes, args.seed)

    width = max(len(n) for n, _ in cases + [("train (20 epochs)", None)])
    header = f"{'operation':<{width}}" + "".join(f"  {n:>12}" for n in names)
    if len(names) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for case_name, call in cases:
        row = f"{case_name:<{width}}"
        per_backend = []
        for name in names:
            kernels = available[name]
            per_backend.append(_time(lambda: call(kernels), args.repeats))
            row += f"  {per_backend[-1] * 1e6:>10.1f}us"
        if len(per_backend) == 2:
            row += f"  {per_backend[0] / per_backend[1]:>7.2f}x"
        print(row)

    original = backend.kernels().NAME
    row = f"{'train (20 epochs)':<{width}}"
    per_backend = []
    try:
        for name in names:
            backend.use(name)
            per_backend.append(_time(training_case(args.seed), 1))
            row += f"  {per_backend[-1] * 1e3:>10.1f}ms"
    finally:
        backend.use(original)
    if len(per_backend) == 2:
        row += f"  {per_backend[0] / per_backend[1]:>7.2f}x"
    print(row)


if __name__ == "__main__":
    main()
