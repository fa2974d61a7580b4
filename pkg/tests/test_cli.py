"""Tests for the command-line interface.

Commands are invoked in-process through main(argv) so exit codes,
stdout/stderr, and written artifacts can all be asserted directly.
Training budgets are tiny: these tests verify plumbing and the exit-code
contract (0 ok, 1 usage/config, 2 data, 3 numerics), not model quality.
"""

import json
import time
from pathlib import Path

import pytest

from diabnet.cli import main
from diabnet.errors import NumericsError


@pytest.fixture
def workspace(tmp_path, pima_csv_path):
    """A config file with tiny budgets plus its artifacts directory."""
    ini = tmp_path / "config.ini"
    ini.write_text(
        f"""[pipeline]
csv = {pima_csv_path}
out_dir = artifacts
configuration = sae_with_cnn

[vae]
epochs = 2

[sae]
epochs = 2

[classifier]
epochs = 2

[joint]
epochs = 2
"""
    )
    return ini, tmp_path / "artifacts"


def read_metrics_lines(out_dir):
    return (out_dir / "metrics.jsonl").read_text().splitlines()


class TestPreprocess:
    def test_writes_sidecar_with_canonical_split(self, workspace, capsys):
        ini, out = workspace
        assert main(["preprocess", "--config", str(ini)]) == 0
        assert "train=691/test=77" in capsys.readouterr().out
        sidecar = json.loads((out / "preprocess.json").read_text())
        assert sidecar["train_rows"] == 691
        assert sidecar["test_rows"] == 77
        assert sidecar["train_class_counts"] == {"0": 449, "1": 242}
        assert len(sidecar["imputation_means"]) == 5
        assert sidecar["normalizer"]["kind"] == "minmax"
        assert len(sidecar["train_indices"]) == 691

    def test_rerun_is_byte_identical(self, workspace):
        ini, out = workspace
        assert main(["preprocess", "--config", str(ini)]) == 0
        first = (out / "preprocess.json").read_bytes()
        assert main(["preprocess", "--config", str(ini)]) == 0
        assert (out / "preprocess.json").read_bytes() == first

    def test_missing_csv_exits_1_and_names_path(self, tmp_path, capsys):
        ini = tmp_path / "config.ini"
        ini.write_text("[pipeline]\ncsv = vanished.csv\n")
        assert main(["preprocess", "--config", str(ini)]) == 1
        assert "vanished.csv" in capsys.readouterr().err


class TestTrain:
    def test_writes_weights_meta_and_metrics(self, workspace, capsys):
        ini, out = workspace
        assert main(["train", "--config", str(ini)]) == 0
        assert (out / "model.adpm").exists()
        meta = json.loads((out / "meta.json").read_text())
        assert meta["configuration"] == "sae_with_cnn"
        assert meta["seed"] == 0
        assert any(name.startswith("joint/") for name in meta["tensors"])

        lines = read_metrics_lines(out)
        assert len(lines) == 1
        record = json.loads(lines[0])  # single-line JSON contract
        assert record["config"] == "sae_with_cnn"
        assert 0.0 <= record["accuracy"] <= 1.0
        assert record["tp"] + record["tn"] + record["fp"] + record["fn"] == 77
        assert record["loss_summary"]["joint"]["epochs"] == 2
        printed = json.loads(capsys.readouterr().out.strip())
        assert printed == record

    def test_rerun_is_deterministic(self, workspace):
        ini, out = workspace
        assert main(["train", "--config", str(ini)]) == 0
        weights = (out / "model.adpm").read_bytes()
        first = json.loads(read_metrics_lines(out)[0])
        assert main(["train", "--config", str(ini)]) == 0
        assert (out / "model.adpm").read_bytes() == weights
        second = json.loads(read_metrics_lines(out)[1])
        first.pop("wall_seconds")
        second.pop("wall_seconds")
        assert first == second

    def test_seed_override_changes_the_run(self, workspace):
        ini, out = workspace
        assert main(["train", "--config", str(ini)]) == 0
        assert main(["train", "--config", str(ini), "--seed", "7"]) == 0
        first, second = (json.loads(l) for l in read_metrics_lines(out))
        assert second["seed"] == 7
        assert first["seed"] == 0

    def test_numerics_failure_exits_3(self, workspace, monkeypatch, capsys):
        ini, _ = workspace

        def explode(cfg):
            raise NumericsError("non-finite loss in joint training")

        monkeypatch.setattr("diabnet.cli.run_configuration", explode)
        assert main(["train", "--config", str(ini)]) == 3
        assert "non-finite" in capsys.readouterr().err


class TestEvaluate:
    def test_matches_train_time_accuracy(self, workspace):
        ini, out = workspace
        assert main(["train", "--config", str(ini)]) == 0
        assert main(["evaluate", "--config", str(ini)]) == 0
        train_line, eval_line = (json.loads(l) for l in read_metrics_lines(out))
        assert eval_line["accuracy"] == train_line["accuracy"]
        assert eval_line["tp"] == train_line["tp"]
        assert eval_line["fn"] == train_line["fn"]

    def test_corrupted_magic_exits_2_naming_file(self, workspace, capsys):
        ini, out = workspace
        assert main(["train", "--config", str(ini)]) == 0
        container = out / "model.adpm"
        blob = bytearray(container.read_bytes())
        blob[:4] = b"JUNK"
        container.write_bytes(bytes(blob))
        assert main(["evaluate", "--config", str(ini)]) == 2
        err = capsys.readouterr().err
        assert "model.adpm" in err
        assert "magic" in err

    def test_config_weights_mismatch_exits_2(self, workspace, capsys):
        ini, out = workspace
        assert main(["train", "--config", str(ini)]) == 0
        mismatched = ini.parent / "mlp.ini"
        mismatched.write_text(
            ini.read_text().replace(
                "configuration = sae_with_cnn", "configuration = mlp"
            )
        )
        assert (
            main(
                [
                    "evaluate",
                    "--config",
                    str(mismatched),
                    "--weights",
                    str(out / "model.adpm"),
                ]
            )
            == 2
        )
        assert "manifest" in capsys.readouterr().err

    def test_absent_weights_exit_nonzero(self, workspace, capsys):
        ini, _ = workspace
        assert main(["evaluate", "--config", str(ini)]) == 1
        assert "model.adpm" in capsys.readouterr().err


class TestExperiment:
    def test_repeats_2_smoke_report(self, workspace, capsys):
        ini, out = workspace
        start = time.monotonic()
        assert main(["experiment", "--config", str(ini), "--repeats", "2"]) == 0
        assert time.monotonic() - start < 60.0

        report = json.loads((out / "report.json").read_text())
        assert set(report) == {"groups", "anova", "tukey", "failures"}
        assert report["anova"]["df_between"] == 4
        assert report["anova"]["df_within"] == 6
        assert len(report["tukey"]) == 10
        assert report["failures"] == []
        assert sum(g["n"] for g in report["groups"].values()) == 11
        assert report["groups"]["sae_with_cnn"]["n"] == 3

        assert len(read_metrics_lines(out)) == 11
        text = capsys.readouterr().out
        assert "ANOVA: F(4, 6)" in text
        assert "configuration" in text

    def test_repeats_below_two_exits_1(self, workspace, capsys):
        ini, _ = workspace
        assert main(["experiment", "--config", str(ini), "--repeats", "1"]) == 1
        assert "repeats" in capsys.readouterr().err


class TestUsageErrors:
    def test_unknown_subcommand_exits_1(self, capsys):
        assert main(["retrain"]) == 1
        assert "invalid choice" in capsys.readouterr().err

    def test_missing_config_flag_exits_1(self, capsys):
        assert main(["train"]) == 1
        assert "--config" in capsys.readouterr().err

    def test_out_override_redirects_artifacts(self, workspace, tmp_path):
        ini, default_out = workspace
        other = tmp_path / "elsewhere"
        assert (
            main(["preprocess", "--config", str(ini), "--out", str(other)]) == 0
        )
        assert (other / "preprocess.json").exists()
        assert not default_out.exists()
