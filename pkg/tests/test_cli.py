import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from venuetrace.cli import cli
from venuetrace.manifest import sha256_file
from venuetrace.ml import ClassifierModel


@pytest.fixture
def runner():
    return CliRunner()


def run_cli(runner, *args):
    result = runner.invoke(cli, args, catch_exceptions=False)
    return result


class TestGenerate:
    def test_reruns_are_byte_identical(self, runner, tmp_path):
        digests = []
        for name in ("one.csv", "two.csv"):
            out = tmp_path / name
            result = run_cli(
                runner, "generate", "--n-records", "1500", "--seed", "11", "--out", str(out)
            )
            assert result.exit_code == 0
            digests.append(sha256_file(out))
        assert digests[0] == digests[1]

    def test_manifest_written(self, runner, tmp_path):
        out = tmp_path / "data.csv"
        run_cli(runner, "generate", "--n-records", "800", "--seed", "3", "--out", str(out))
        manifest = json.loads((tmp_path / "data.manifest.json").read_text())
        assert manifest["command"] == "generate"
        assert manifest["seed"] == 3
        assert str(out) in manifest["outputs"]
        assert manifest["outputs"][str(out)] == sha256_file(out)

    def test_pairs_mode_two_seeds(self, runner, tmp_path):
        out = tmp_path / "pair.csv"
        result = run_cli(
            runner, "generate", "--n-records", "600", "--seed", "7", "--pairs", "--out", str(out)
        )
        assert result.exit_code == 0
        a, b = tmp_path / "pair-a.csv", tmp_path / "pair-b.csv"
        assert a.exists() and b.exists()
        assert sha256_file(a) != sha256_file(b)

    def test_preset_size(self, runner, tmp_path):
        out = tmp_path / "p.csv"
        result = run_cli(runner, "generate", "--size", "150k", "--seed", "1", "--out", str(out))
        assert result.exit_code == 0
        with open(out) as fh:
            assert sum(1 for _ in fh) == 150_001  # header + rows

    def test_balanced_flag(self, runner, tmp_path):
        out = tmp_path / "b.csv"
        run_cli(runner, "generate", "--n-records", "1000", "--seed", "2", "--balanced", "--out", str(out))
        from venuetrace.synth import read_dataset_csv

        data = read_dataset_csv(out)
        assert int(data.labels.sum()) * 2 == len(data)


class TestTrain:
    @pytest.fixture
    def dataset(self, runner, tmp_path):
        out = tmp_path / "train.csv"
        run_cli(runner, "generate", "--n-records", "1200", "--seed", "5", "--balanced", "--out", str(out))
        return out

    def test_metrics_and_model_artifacts(self, runner, tmp_path, dataset):
        model_path = tmp_path / "model.json"
        report_path = tmp_path / "metrics.json"
        result = run_cli(
            runner, "train", "--dataset", str(dataset), "--draws", "2",
            "--out-model", str(model_path), "--report", str(report_path),
        )
        assert result.exit_code == 0
        assert "Accuracy" in result.output and "logreg" in result.output
        ClassifierModel.load(model_path)  # parses
        metrics = json.loads(report_path.read_text())
        assert set(metrics["logreg"]) == {"Accuracy", "AUC", "Recall", "Precision", "F1", "Kappa", "MCC"}

    def test_manifest_audits_split_discipline(self, runner, tmp_path, dataset):
        model_path = tmp_path / "model.json"
        run_cli(runner, "train", "--dataset", str(dataset), "--draws", "1", "--out-model", str(model_path))
        manifest = json.loads((tmp_path / "model.manifest.json").read_text())
        results = manifest["results"]
        assert results["folds_within_train"] is True
        assert results["train_rows"] == 840 and results["test_rows"] == 360
        assert results["train_ids_sha256"] != results["test_ids_sha256"]
        assert str(dataset) in manifest["inputs"]

    def test_naive_bayes_variant(self, runner, tmp_path, dataset):
        model_path = tmp_path / "nb.json"
        result = run_cli(
            runner, "train", "--dataset", str(dataset), "--model", "nb", "--draws", "1",
            "--out-model", str(model_path),
        )
        assert result.exit_code == 0


class TestLambda:
    def test_grid_report_contains_default(self, runner, tmp_path):
        out = tmp_path / "d.csv"
        run_cli(runner, "generate", "--n-records", "400", "--seed", "9", "--out", str(out))
        result = run_cli(runner, "lambda", "--dataset", str(out))
        assert result.exit_code == 0
        assert "0.0001" in result.output
        assert "<- selected" in result.output

    def test_single_candidate(self, runner, tmp_path):
        out = tmp_path / "d.csv"
        run_cli(runner, "generate", "--n-records", "300", "--seed", "9", "--out", str(out))
        result = run_cli(runner, "lambda", "--dataset", str(out), "--grid", "0.0001")
        assert result.exit_code == 0
        assert result.output.count("<- selected") == 1


class TestSimulate:
    def test_fault_free_scenario(self, runner, tmp_path):
        scenario = tmp_path / "s.json"
        scenario.write_text(json.dumps({"n_nodes": 4, "f_byzantine": 0, "seed": 3}))
        result = run_cli(runner, "simulate", "--scenario", str(scenario), "--commands", "50")
        assert result.exit_code == 0
        assert "safety held" in result.output

    def test_equivocation_scenario_with_trace(self, runner, tmp_path):
        scenario = tmp_path / "s.json"
        scenario.write_text(
            json.dumps(
                {
                    "n_nodes": 4, "f_byzantine": 1, "seed": 4,
                    "faults": [{"node": 0, "kind": "equivocate", "at_round": 2}],
                }
            )
        )
        trace = tmp_path / "trace.log"
        result = run_cli(
            runner, "simulate", "--scenario", str(scenario), "--commands", "50", "--trace", str(trace)
        )
        assert result.exit_code == 0
        assert "safety held" in result.output
        first_line = trace.read_text().splitlines()[0]
        assert "round=" in first_line and "kind=" in first_line


class TestCalibrate:
    def test_reports_scale_in_band(self, runner, tmp_path):
        result = run_cli(runner, "calibrate", "--out", str(tmp_path / "table.json"))
        assert result.exit_code == 0
        accuracy = float(result.output.split("oracle accuracy")[1].split()[0])
        assert 0.70 <= accuracy <= 0.74
        assert (tmp_path / "table.json").exists()


class TestReport:
    def test_renders_saved_metrics(self, runner, tmp_path):
        metrics = {"logreg": dict(zip(("Accuracy", "AUC", "Recall", "Precision", "F1", "Kappa", "MCC"),
                                      (0.7, 0.75, 0.74, 0.65, 0.69, 0.35, 0.36)))}
        path = tmp_path / "m.json"
        path.write_text(json.dumps(metrics))
        result = run_cli(runner, "report", "--metrics", str(path))
        assert result.exit_code == 0
        assert "logreg" in result.output and "0.750" in result.output


class TestServe:
    def test_start_and_health_check(self, tmp_path):
        import time
        import urllib.request

        from venuetrace.service import zero_rate_model

        model_path = tmp_path / "model.json"
        zero_rate_model().save(model_path)
        port = 23000 + (hash(str(tmp_path)) % 2000)
        proc = subprocess.Popen(
            [sys.executable, "-m", "venuetrace.cli", "serve", "--model", str(model_path),
             "--port", str(port), "--silos", "2"],
            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
        )
        try:
            body = None
            for _ in range(60):
                try:
                    with urllib.request.urlopen(f"http://127.0.0.1:{port}/health", timeout=1) as response:
                        body = json.loads(response.read())
                    break
                except OSError:
                    time.sleep(0.25)
            assert body == {"status": "ok", "silos": 2, "backend": "direct", "quorum_ok": True}
            assert (tmp_path / "model.serve.manifest.json").exists()
        finally:
            proc.terminate()
            proc.wait(timeout=10)


class TestExitCodes:
    def run_main(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "venuetrace.cli", *args], capture_output=True, text=True
        )

    def test_usage_error_is_one(self):
        proc = self.run_main("generate")  # missing required --out
        assert proc.returncode == 1

    def test_data_error_is_two(self, tmp_path):
        scenario = tmp_path / "bad.json"
        scenario.write_text(json.dumps({"n_nodes": 3, "f_byzantine": 1, "seed": 0}))
        proc = self.run_main("simulate", "--scenario", str(scenario))
        assert proc.returncode == 2
        assert "invalid scenario" in proc.stderr

    def test_missing_model_is_data_error(self, tmp_path):
        proc = self.run_main("serve", "--model", str(tmp_path / "missing.json"))
        assert proc.returncode == 2

    def test_ok_is_zero(self, tmp_path):
        out = tmp_path / "ok.csv"
        proc = self.run_main("generate", "--n-records", "200", "--seed", "1", "--out", str(out))
        assert proc.returncode == 0

    def test_invalid_preset_is_data_error(self, tmp_path):
        proc = self.run_main("generate", "--size", "9zillion", "--out", str(tmp_path / "x.csv"))
        assert proc.returncode == 2
