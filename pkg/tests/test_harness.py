"""Tests for the experiment runner, method catalog, and the CLI."""

import json

import numpy as np
import pytest

from mixbal.cli import main
from mixbal.errors import InvalidSpecError, UnknownMethodError
from mixbal.harness import (
    ExperimentConfig,
    RunRecord,
    compare,
    config_from_dict,
    correlate,
    default_benchmark_config,
    load_config,
    method_catalog,
    resolve_method,
    run_experiment,
    run_single,
    summarize,
)


def _write_synthetic_records(tmp_path, gaps, accs, method="erm"):
    """Record files with chosen (margin gap, accuracy) pairs."""
    paths = []
    for seed, (gap, acc) in enumerate(zip(gaps, accs), start=1):
        payload = {
            "seed": seed,
            "method": method,
            "dataset": {"imbalance": "long_tailed", "rho": 10},
            "balanced_accuracy": acc,
            "per_class_accuracy": [acc, acc],
            "margin_report": {
                "per_class_margin": [gap, -gap],
                "margin_gap": gap,
                "majority_mask": [True, False],
                "decomposition": {
                    "majority_negative": None,
                    "majority_nonnegative": gap,
                    "minority_negative": -gap,
                    "minority_nonnegative": None,
                },
                "l2_fit_error": 0.1,
                "balanced_accuracy": acc,
                "per_class_accuracy": [acc, acc],
            },
            "final_train_loss": 0.5,
        }
        path = tmp_path / f"record_seed{seed}.json"
        path.write_text(json.dumps(payload))
        paths.append(path)
    return paths


def _tiny_payload(method="erm", seeds=(1, 2)):
    return {
        "dataset": {
            "source": {"kind": "blobs", "classes": 3, "dim": 4, "n_per_class": 60, "sep": 3.0},
            "imbalance": "long_tailed",
            "rho": 10,
            "n_max": 40,
            "eval_per_class": 10,
        },
        "method": method,
        "train": {
            "epochs": 4,
            "batch_size": 32,
            "warmup_epochs": 2,
            "decay_epochs": [3],
            "drw_epoch": 3,
            "hidden": 8,
        },
        "seeds": list(seeds),
    }


class TestResolveMethod:
    def test_baseline(self):
        plan = resolve_method("erm")
        assert plan.mixer_method is None
        assert plan.loss == "soft_ce"
        assert not plan.deferred_reweight
        assert not plan.smote_preprocess

    def test_drw_alias(self):
        assert resolve_method("drw") == resolve_method("erm-drw")

    def test_suffix_enables_deferred_reweighting(self):
        for base in ("erm", "mixup", "remix", "mamix", "ldam"):
            plan = resolve_method(f"{base}-drw")
            assert plan.deferred_reweight

    def test_mixer_mapping(self):
        assert resolve_method("mixup").mixer_method == "mixup"
        assert resolve_method("remix").mixer_method == "remix"
        assert resolve_method("mamix").mixer_method == "mamix"
        assert resolve_method("mamix-remix").mixer_method == "mamix_remix"
        assert resolve_method("smote-mix").mixer_method == "smote_mix"
        assert resolve_method("neighbor-mix").mixer_method == "neighbor_mix"

    def test_ldam_uses_margin_loss(self):
        assert resolve_method("ldam").loss == "ldam"
        assert resolve_method("ldam-drw").loss == "ldam"

    def test_smote_is_a_preprocessing_method(self):
        plan = resolve_method("smote")
        assert plan.smote_preprocess
        assert plan.mixer_method is None

    def test_case_insensitive(self):
        assert resolve_method("MixUp").mixer_method == "mixup"

    def test_unknown_method_lists_catalog(self):
        with pytest.raises(UnknownMethodError) as err:
            resolve_method("cutmix")
        message = str(err.value)
        for name in ("erm", "mixup", "mamix-drw"):
            assert name in message

    def test_catalog_contents(self):
        names = method_catalog()
        assert "erm" in names
        assert "drw" in names
        assert "mamix-drw" in names
        assert "smote-mix" in names
        assert len(names) == len(set(names))


class TestConfigParsing:
    def test_round_trip_defaults(self):
        config = config_from_dict(_tiny_payload())
        assert config.dataset.source.classes == 3
        assert config.dataset.rho == 10
        assert config.train.epochs == 4
        assert config.train.decay_epochs == (3,)
        assert config.seeds == (1, 2)
        assert config.mixer is None

    def test_mixer_built_for_mixing_methods(self):
        payload = _tiny_payload(method="remix")
        payload["mixer"] = {"alpha": 0.5, "tau": 0.4}
        config = config_from_dict(payload)
        assert config.mixer.method == "remix"
        assert config.mixer.alpha == 0.5
        assert config.mixer.tau == 0.4

    def test_unknown_top_level_key_rejected(self):
        payload = _tiny_payload()
        payload["extra"] = 1
        with pytest.raises(InvalidSpecError, match="top level"):
            config_from_dict(payload)

    def test_unknown_dataset_key_rejected(self):
        payload = _tiny_payload()
        payload["dataset"]["shuffle"] = True
        with pytest.raises(InvalidSpecError, match="dataset"):
            config_from_dict(payload)

    def test_unknown_source_key_rejected(self):
        payload = _tiny_payload()
        payload["dataset"]["source"]["noise"] = 2.0
        with pytest.raises(InvalidSpecError, match="source"):
            config_from_dict(payload)

    def test_unknown_train_key_rejected(self):
        payload = _tiny_payload()
        payload["train"]["optimizer"] = "adam"
        with pytest.raises(InvalidSpecError, match="train"):
            config_from_dict(payload)

    def test_unknown_mixer_key_rejected(self):
        payload = _tiny_payload(method="mixup")
        payload["mixer"] = {"beta": 1.0}
        with pytest.raises(InvalidSpecError, match="mixer"):
            config_from_dict(payload)

    def test_derived_train_keys_rejected(self):
        payload = _tiny_payload()
        payload["train"]["loss"] = "ldam"
        with pytest.raises(InvalidSpecError, match="derived"):
            config_from_dict(payload)
        payload = _tiny_payload()
        payload["train"]["seed"] = 3
        with pytest.raises(InvalidSpecError, match="derived"):
            config_from_dict(payload)

    def test_mixer_method_key_rejected(self):
        payload = _tiny_payload(method="mixup")
        payload["mixer"] = {"method": "remix"}
        with pytest.raises(InvalidSpecError, match="derived"):
            config_from_dict(payload)

    def test_imbalance_aliases(self):
        payload = _tiny_payload()
        payload["dataset"]["imbalance"] = "lt"
        assert config_from_dict(payload).dataset.imbalance == "long_tailed"
        payload["dataset"]["imbalance"] = "zipf"
        with pytest.raises(InvalidSpecError, match="imbalance"):
            config_from_dict(payload)

    def test_unknown_method_rejected_at_parse(self):
        with pytest.raises(UnknownMethodError):
            config_from_dict(_tiny_payload(method="cutmix"))

    def test_load_config_file(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text(json.dumps(_tiny_payload()))
        config = load_config(path)
        assert isinstance(config, ExperimentConfig)

    def test_default_benchmark_config(self):
        config = default_benchmark_config("mamix-drw", rho=50.0)
        assert config.dataset.rho == 50.0
        assert config.mixer.method == "mamix"
        assert config.train.drw_epoch == 80
        assert config.seeds == (1, 2, 3, 4, 5)


class TestRunExperiment:
    def test_layout_and_summary(self, tmp_path):
        config = config_from_dict(_tiny_payload())
        out = tmp_path / "run"
        summary = run_experiment(config, out)
        assert (out / "config.json").exists()
        assert (out / "summary.json").exists()
        assert (out / "summary.csv").exists()
        for seed in (1, 2):
            assert (out / f"record_seed{seed}.json").exists()
            assert (out / f"logits_seed{seed}.csv").exists()
        assert summary["method"] == "erm"
        assert summary["seeds"] == [1, 2]
        assert not summary["single_run"]
        assert 0.0 <= summary["balanced_accuracy"]["mean"] <= 1.0
        assert summary["balanced_accuracy"]["std"] >= 0.0
        header = (out / "summary.csv").read_text().splitlines()[0]
        assert header == "method,rho,kind,mean,std,margin_gap_mean"

    def test_records_are_byte_identical_on_rerun(self, tmp_path):
        config = config_from_dict(_tiny_payload(method="mamix-drw"))
        a, b = tmp_path / "a", tmp_path / "b"
        run_experiment(config, a)
        run_experiment(config, b)
        for seed in (1, 2):
            name = f"record_seed{seed}.json"
            assert (a / name).read_bytes() == (b / name).read_bytes()
            logits = f"logits_seed{seed}.csv"
            assert (a / logits).read_bytes() == (b / logits).read_bytes()
        assert (a / "summary.json").read_text() != ""

    def test_record_round_trip(self, tmp_path):
        config = config_from_dict(_tiny_payload(seeds=(3,)))
        out = tmp_path / "run"
        run_experiment(config, out)
        payload = json.loads((out / "record_seed3.json").read_text())
        record = RunRecord.from_dict(payload)
        assert record.seed == 3
        assert record.method == "erm"
        assert "wall_time_s" not in payload  # reruns must be byte-identical

    def test_single_seed_summary(self):
        config = config_from_dict(_tiny_payload(seeds=(1,)))
        record, _ = run_single(config, 1)
        summary = summarize(config, [record])
        assert summary["single_run"]
        assert summary["balanced_accuracy"]["std"] == 0.0

    def test_smote_method_runs(self, tmp_path):
        config = config_from_dict(_tiny_payload(method="smote", seeds=(1,)))
        record, _ = run_single(config, 1)
        # counts in the record reflect the pre-oversampling histogram
        assert record.dataset["rho"] == 10

    def test_ldam_method_runs(self):
        payload = _tiny_payload(method="ldam", seeds=(1,))
        payload["train"]["lr"] = 0.01
        record, _ = run_single(config_from_dict(payload), 1)
        assert np.isfinite(record.balanced_accuracy)


class TestCompareAndCorrelate:
    def _summaries(self, tmp_path, methods=("erm", "mixup")):
        paths = []
        for method in methods:
            config = config_from_dict(_tiny_payload(method=method))
            out = tmp_path / method
            run_experiment(config, out)
            paths.append(out / "summary.json")
        return paths

    def test_compare_rows_and_deltas(self, tmp_path):
        paths = self._summaries(tmp_path)
        table = compare(paths)
        assert [row["method"] for row in table["rows"]] == ["erm", "mixup"]
        assert table["rows"][0]["delta_accuracy"] == 0.0
        got = table["rows"][1]["balanced_accuracy_mean"] - table["rows"][0][
            "balanced_accuracy_mean"
        ]
        assert table["rows"][1]["delta_accuracy"] == pytest.approx(got)

    def test_compare_rejects_mismatched_datasets(self, tmp_path):
        path_a = self._summaries(tmp_path, methods=("erm",))[0]
        payload = _tiny_payload(method="mixup")
        payload["dataset"]["rho"] = 30
        out = tmp_path / "other"
        run_experiment(config_from_dict(payload), out)
        with pytest.raises(InvalidSpecError, match="does not match"):
            compare([path_a, out / "summary.json"])

    def test_correlate_needs_three_records(self, tmp_path):
        config = config_from_dict(_tiny_payload(seeds=(1, 2)))
        out = tmp_path / "run"
        run_experiment(config, out)
        with pytest.raises(InvalidSpecError, match="three"):
            correlate([out / "record_seed1.json", out / "record_seed2.json"])

    def test_correlate_reports_rho_and_points(self, tmp_path):
        paths = _write_synthetic_records(
            tmp_path, gaps=[3.0, 2.0, 1.0, 0.5], accs=[0.4, 0.5, 0.6, 0.7]
        )
        result = correlate(paths)
        assert result["spearman_rho"] == -1.0
        assert len(result["points"]) == 4
        assert {"method", "seed", "margin_gap", "balanced_accuracy"} <= set(
            result["points"][0]
        )


class TestCli:
    def _write_config(self, tmp_path, payload=None):
        path = tmp_path / "exp.json"
        path.write_text(json.dumps(payload or _tiny_payload(seeds=(1,))))
        return path

    def test_run_command(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path)
        out = tmp_path / "out"
        rc = main(["run", str(cfg), "--out", str(out)])
        assert rc == 0
        assert (out / "summary.json").exists()
        assert "balanced accuracy" in capsys.readouterr().out

    def test_run_overrides(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path)
        out = tmp_path / "out"
        rc = main(
            ["run", str(cfg), "--out", str(out), "--method", "mixup",
             "--seeds", "7", "--rho", "5", "--imbalance", "step"]
        )
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["method"] == "mixup"
        assert summary["seeds"] == [7]
        assert summary["dataset"]["rho"] == 5
        assert summary["dataset"]["imbalance"] == "step"

    def test_run_unknown_method_fails_cleanly(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path)
        rc = main(["run", str(cfg), "--method", "cutmix", "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_compare_command(self, tmp_path, capsys):
        for method in ("erm", "mixup"):
            cfg = self._write_config(tmp_path, _tiny_payload(method=method, seeds=(1,)))
            assert main(["run", str(cfg), "--out", str(tmp_path / method)]) == 0
        capsys.readouterr()
        rc = main(
            ["compare", str(tmp_path / "erm" / "summary.json"),
             str(tmp_path / "mixup" / "summary.json"),
             "--out", str(tmp_path / "cmp")]
        )
        assert rc == 0
        assert "erm" in capsys.readouterr().out
        assert (tmp_path / "cmp" / "compare.csv").exists()
        assert (tmp_path / "cmp" / "compare.json").exists()

    def test_correlate_command_with_glob(self, tmp_path, capsys):
        records_dir = tmp_path / "r"
        records_dir.mkdir()
        _write_synthetic_records(
            records_dir, gaps=[3.0, 2.0, 1.0], accs=[0.4, 0.5, 0.6]
        )
        rc = main(
            ["correlate", str(records_dir / "record_seed*.json"),
             "--out", str(tmp_path / "cor")]
        )
        assert rc == 0
        assert "spearman" in capsys.readouterr().out
        assert (tmp_path / "cor" / "scatter.csv").exists()

    def test_margins_command(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["run", str(cfg), "--out", str(out)]) == 0
        labels = tmp_path / "labels.txt"
        labels.write_text("\n".join(["0"] * 10 + ["1"] * 10 + ["2"] * 10))
        capsys.readouterr()
        rc = main(
            ["margins", str(out / "logits_seed1.csv"), str(labels), "40,13,4",
             "--out", str(tmp_path / "m")]
        )
        assert rc == 0
        payload = json.loads((tmp_path / "m" / "margins.json").read_text())
        assert "margin_gap" in payload
        assert payload["majority_mask"] == [True, False, False]

    def test_missing_config_fails_cleanly(self, tmp_path, capsys):
        rc = main(["run", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err
