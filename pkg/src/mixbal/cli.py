"""Command-line entry point.

Subcommands: ``run`` (execute an experiment config), ``compare``
(side-by-side summaries), ``correlate`` (margin gap vs accuracy across
records), ``margins`` (margin report for an exported logits file).
"""

from __future__ import annotations

import argparse
import glob
import json
import sys
from pathlib import Path

import numpy as np

from .errors import MixbalError
from .harness import compare, config_from_dict, correlate, run_experiment
from .metrics import compute_margin_report
from .model import load_logits_csv


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


_IMBALANCE_FLAG = {"lt": "long_tailed", "step": "step"}


def _read_int_list(arg: str) -> np.ndarray:
    """Integers from a file (whitespace separated) or a comma list."""
    path = Path(arg)
    if path.exists():
        tokens = path.read_text().replace(",", " ").split()
    else:
        tokens = [part for part in arg.split(",") if part.strip()]
    return np.array([int(tok) for tok in tokens], dtype=np.int64)


def _cmd_run(args) -> int:
    payload = json.loads(Path(args.config).read_text())
    if args.method:
        payload["method"] = args.method
    if args.rho is not None:
        payload.setdefault("dataset", {})["rho"] = args.rho
    if args.imbalance:
        payload.setdefault("dataset", {})["imbalance"] = _IMBALANCE_FLAG[args.imbalance]
    if args.seeds:
        payload["seeds"] = list(_parse_seeds(args.seeds))
    config = config_from_dict(payload)
    summary = run_experiment(config, args.out)
    acc = summary["balanced_accuracy"]
    print(
        f"{summary['method']}: balanced accuracy "
        f"{acc['mean']:.4f} +/- {acc['std']:.4f} "
        f"(margin gap {summary['margin_gap']['mean']:.4f}) -> {args.out}"
    )
    return 0


def _cmd_compare(args) -> int:
    table = compare(args.summaries)
    print(f"{'method':<16} {'bal.acc':>10} {'std':>8} {'gap':>9} {'d.acc':>8}")
    for row in table["rows"]:
        print(
            f"{row['method']:<16} {row['balanced_accuracy_mean']:>10.4f} "
            f"{row['balanced_accuracy_std']:>8.4f} {row['margin_gap_mean']:>9.4f} "
            f"{row['delta_accuracy']:>+8.4f}"
        )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.json").write_text(json.dumps(table, indent=2) + "\n")
        import csv

        with (out / "compare.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["method", "balanced_accuracy_mean", "balanced_accuracy_std",
                 "margin_gap_mean", "delta_accuracy", "delta_margin_gap"]
            )
            for row in table["rows"]:
                writer.writerow([row[key] for key in
                                 ("method", "balanced_accuracy_mean",
                                  "balanced_accuracy_std", "margin_gap_mean",
                                  "delta_accuracy", "delta_margin_gap")])
    return 0


def _expand_records(patterns: list[str]) -> list[str]:
    paths = []
    for pattern in patterns:
        matches = sorted(glob.glob(pattern))
        paths.extend(matches if matches else [pattern])
    return paths


def _cmd_correlate(args) -> int:
    result = correlate(_expand_records(args.records))
    print(f"spearman rho = {result['spearman_rho']:+.4f} over {len(result['points'])} runs")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "correlate.json").write_text(json.dumps(result, indent=2) + "\n")
        import csv

        with (out / "scatter.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "seed", "margin_gap", "balanced_accuracy"])
            for point in result["points"]:
                writer.writerow([point["method"], point["seed"],
                                 point["margin_gap"], point["balanced_accuracy"]])
    return 0


def _cmd_margins(args) -> int:
    logits = load_logits_csv(args.logits)
    labels = _read_int_list(args.labels)
    counts = _read_int_list(args.counts)
    report = compute_margin_report(logits, labels, counts)
    text = json.dumps(report.to_dict(), indent=2)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "margins.json").write_text(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixbal",
        description="Mixing-based training for imbalanced classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="experiment JSON file")
    p_run.add_argument("--out", default="runs/latest", help="output directory")
    p_run.add_argument("--seeds", help="comma-separated seed list override")
    p_run.add_argument("--method", help="method name override")
    p_run.add_argument("--rho", type=float, help="imbalance ratio override")
    p_run.add_argument("--imbalance", choices=sorted(_IMBALANCE_FLAG),
                       help="imbalance profile override")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="compare summary tables")
    p_cmp.add_argument("summaries", nargs="+", help="summary.json files")
    p_cmp.add_argument("--out", help="directory for compare.csv/json")
    p_cmp.set_defaults(func=_cmd_compare)

    p_cor = sub.add_parser("correlate", help="margin gap vs accuracy across records")
    p_cor.add_argument("records", nargs="+", help="record JSON files or globs")
    p_cor.add_argument("--out", help="directory for correlate.json and scatter.csv")
    p_cor.set_defaults(func=_cmd_correlate)

    p_mar = sub.add_parser("margins", help="margin report for exported logits")
    p_mar.add_argument("logits", help="logits CSV")
    p_mar.add_argument("labels", help="label file or comma list")
    p_mar.add_argument("counts", help="training-count file or comma list")
    p_mar.add_argument("--out", help="directory for margins.json")
    p_mar.set_defaults(func=_cmd_margins)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MixbalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
