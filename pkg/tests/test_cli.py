import json

import numpy as np
import pandas as pd
import pytest
from typer.testing import CliRunner

from config.settings import PROJECT_ROOT
from core.metrics import ConfusionMatrix, result_row, write_results
from main import app

TOY = str(PROJECT_ROOT / "config" / "runs" / "toy.json")
SMALL = ["--data.n_images=4", "--data.n_eval_images=2", "--train.iterations=1", "--train.batch_size=2",
         "--eval.snr_grid=[5, 15]", "--eval.batch_size=2"]

runner = CliRunner()


def run_dirs(root, command):
    return sorted(p for p in root.iterdir() if p.name.startswith(command + "-"))


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


class TestTrain:
    def test_override_echoed_in_config(self, out):
        result = runner.invoke(app, ["train", "--config", TOY, "--out", str(out),
                                     "--loss.ohem.enabled=false", *SMALL])
        assert result.exit_code == 0, result.output
        (run,) = run_dirs(out, "train")
        cfg = json.loads((run / "config.json").read_text())
        assert cfg["loss"]["ohem"]["enabled"] is False
        assert cfg["train"]["iterations"] == 1
        assert (run / "checkpoint.pt").is_file()
        assert (run / "train_log.csv").is_file()

    def test_global_options_before_command(self, out):
        result = runner.invoke(app, ["--config", TOY, "--out", str(out), "--seed", "5", "train", *SMALL])
        assert result.exit_code == 0, result.output
        (run,) = run_dirs(out, "train")
        assert json.loads((run / "config.json").read_text())["seed"] == 5

    def test_space_separated_override(self, out):
        result = runner.invoke(app, ["train", "--config", TOY, "--out", str(out), "--codec.k_channels", "8", *SMALL])
        assert result.exit_code == 0, result.output
        (run,) = run_dirs(out, "train")
        assert json.loads((run / "config.json").read_text())["codec"]["k_channels"] == 8

    def test_unknown_key(self, out, log_messages):
        result = runner.invoke(app, ["train", "--config", TOY, "--out", str(out), "--loss.nope=1"])
        assert result.exit_code == 1
        assert any("loss.nope" in m for m in log_messages)

    def test_invalid_value(self, out):
        result = runner.invoke(app, ["train", "--config", TOY, "--out", str(out), "--train.lr=-1"])
        assert result.exit_code == 1

    def test_missing_dataset_root(self, out, tmp_path, log_messages):
        missing = tmp_path / "no_such_cityscapes"
        result = runner.invoke(app, ["train", "--config", TOY, "--out", str(out), "--data.kind=cityscapes",
                                     "--data.n_cls=19", "--loss.important=[]", "--codec.n_cls=19",
                                     f"--data.root={missing}"])
        assert result.exit_code == 1
        assert any("no_such_cityscapes" in m for m in log_messages)


class TestExperiments:
    @pytest.fixture
    def checkpoint(self, out):
        result = runner.invoke(app, ["train", "--config", TOY, "--out", str(out), *SMALL])
        assert result.exit_code == 0, result.output
        return run_dirs(out, "train")[0] / "checkpoint.pt"

    def test_eval_writes_results(self, out, checkpoint):
        result = runner.invoke(app, ["eval", "--config", TOY, "--out", str(out), "--checkpoint", str(checkpoint),
                                     "--plot", *SMALL])
        assert result.exit_code == 0, result.output
        (run,) = run_dirs(out, "eval")
        assert (run / "results.csv").is_file()
        assert (run / "miou_vs_snr.png").is_file()

    def test_sweep_compression_bad_format(self, out):
        result = runner.invoke(app, ["sweep-compression", "--config", TOY, "--out", str(out),
                                     "--checkpoint", "model.pt"])
        assert result.exit_code == 1

    def test_sweep_compression(self, out, checkpoint):
        result = runner.invoke(app, ["sweep-compression", "--config", TOY, "--out", str(out),
                                     "--checkpoint", f"32={checkpoint}", "--snr", "10", *SMALL])
        assert result.exit_code == 0, result.output
        (run,) = run_dirs(out, "sweep-compression")
        df = pd.read_csv(run / "results.csv")
        assert len(df) == 1
        assert df["R"].iloc[0] == 24.0 and df["snr_db"].iloc[0] == 10.0

    def test_ablate_unknown_axis(self, out):
        result = runner.invoke(app, ["ablate", "--config", TOY, "--out", str(out), "--axis", "dropout"])
        assert result.exit_code == 1

    def test_baseline_without_segmenter(self, out):
        result = runner.invoke(app, ["baseline", "--config", TOY, "--out", str(out)])
        assert result.exit_code == 1


class TestPlot:
    def _csv(self, tmp_path):
        names = ["background", "car"]
        cm = ConfusionMatrix(2).update(np.array([[0, 1]]), np.array([[0, 1]]))
        rows = [result_row("vis-semcom", 50.0, 24.0, snr, cm, names) for snr in (1.0, 4.0, 7.0)]
        return write_results(rows, tmp_path / "results.csv", names)

    def test_plot(self, tmp_path):
        path = self._csv(tmp_path)
        result = runner.invoke(app, ["plot", "--csv", str(path)])
        assert result.exit_code == 0, result.output
        assert path.with_suffix(".png").is_file()

    def test_plot_bad_axis(self, tmp_path):
        result = runner.invoke(app, ["plot", "--csv", str(self._csv(tmp_path)), "--x", "velocity"])
        assert result.exit_code == 1

    def test_plot_missing_csv(self, tmp_path):
        result = runner.invoke(app, ["plot", "--csv", str(tmp_path / "none.csv")])
        assert result.exit_code == 1
