import csv
import json

import numpy as np
import pytest

from funbayes.cli import main, read_curves, write_curves
from funbayes import Grid


def run_cli(*args):
    return main([str(a) for a in args])


@pytest.fixture
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    code = run_cli(
        "simulate", "--scenario", "RSDN", "--n-train", 60, "--n-test", 40, "--seed", 7, "--out", out
    )
    assert code == 0
    return out


class TestSimulate:
    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run_cli("simulate", "--scenario", "RSDN", "--seed", 7, "--out", out) == 0
        assert (a / "train.csv").read_bytes() == (b / "train.csv").read_bytes()
        assert (a / "test.csv").read_bytes() == (b / "test.csv").read_bytes()

    def test_unknown_label_is_usage_error(self, tmp_path):
        assert run_cli("simulate", "--scenario", "XXXX", "--out", tmp_path / "x") == 1

    def test_multiclass_labels_present(self, tmp_path):
        out = tmp_path / "m"
        assert run_cli("simulate", "--scenario", "MDSN", "--seed", 1, "--out", out) == 0
        _, _, labels = read_curves(out / "train.csv")
        assert sorted(np.unique(labels)) == [0, 1, 2]

    def test_manifest_echoes_config(self, sim_dir):
        manifest = json.loads((sim_dir / "manifest.json").read_text())
        assert manifest["label"] == "RSDN"
        assert manifest["n_train"] == 60
        assert manifest["seed"] == 7

    def test_files_reload_exactly(self, sim_dir):
        grid, curves, labels = read_curves(sim_dir / "train.csv")
        assert curves.shape == (60, 51)
        path2 = sim_dir / "rewrite.csv"
        write_curves(path2, grid, curves, labels)
        assert path2.read_bytes() == (sim_dir / "train.csv").read_bytes()


class TestTrainClassify:
    def test_round_trip(self, sim_dir, tmp_path):
        model = tmp_path / "model.json"
        code = run_cli(
            "train", "--method", "bcg", "--data", sim_dir / "train.csv",
            "--J-range", "2:4", "--folds", "5", "--model", model,
        )
        assert code == 0
        pred = tmp_path / "pred.csv"
        assert run_cli("classify", "--model", model, "--data", sim_dir / "test.csv", "--out", pred) == 0
        with open(pred) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["label"]
        labels = np.array([int(r[0]) for r in rows[1:]])
        _, _, truth = read_curves(sim_dir / "test.csv")
        assert labels.shape == truth.shape
        assert np.mean(labels != truth) < 0.45  # learns something on RSDN

    def test_fixed_j_and_scores_output(self, sim_dir, tmp_path):
        model = tmp_path / "model.json"
        assert run_cli("train", "--method", "bc", "--data", sim_dir / "train.csv", "--J", 2, "--model", model) == 0
        pred = tmp_path / "pred.csv"
        assert run_cli("classify", "--model", model, "--data", sim_dir / "test.csv", "--out", pred, "--scores") == 0
        with open(pred) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["label", "log_posterior_0", "log_posterior_1"]
        first = rows[1]
        lp = np.array([float(first[1]), float(first[2])])
        assert int(first[0]) == int(np.argmax(lp))

    def test_cen_on_multiclass_is_usage_error(self, tmp_path):
        out = tmp_path / "m3"
        run_cli("simulate", "--scenario", "MSSN", "--seed", 3, "--out", out)
        code = run_cli("train", "--method", "cen", "--data", out / "train.csv", "--J", 2, "--model", tmp_path / "m.json")
        assert code == 1

    def test_copula_j_range_floor_raised(self, sim_dir, tmp_path, capsys):
        model = tmp_path / "model.json"
        code = run_cli(
            "train", "--method", "bcg", "--data", sim_dir / "train.csv",
            "--J-range", "1:3", "--folds", "5", "--model", model,
        )
        assert code == 0
        out = capsys.readouterr().out
        curve_lines = [l for l in out.splitlines() if "," in l and l.split(",")[0].isdigit()]
        assert all(int(l.split(",")[0]) >= 2 for l in curve_lines)  # floor raised to 2

    def test_grid_mismatch_is_data_error(self, sim_dir, tmp_path):
        model = tmp_path / "model.json"
        run_cli("train", "--method", "bc", "--data", sim_dir / "train.csv", "--J", 2, "--model", model)
        other = tmp_path / "other"
        run_cli("simulate", "--scenario", "RSDN", "--grid-points", 41, "--out", other)
        code = run_cli("classify", "--model", model, "--data", other / "test.csv", "--out", tmp_path / "p.csv")
        assert code == 2

    def test_empty_input_gives_header_only(self, sim_dir, tmp_path):
        model = tmp_path / "model.json"
        run_cli("train", "--method", "bc", "--data", sim_dir / "train.csv", "--J", 2, "--model", model)
        grid, curves, _ = read_curves(sim_dir / "test.csv")
        empty = tmp_path / "empty.csv"
        write_curves(empty, grid, curves[:0])
        pred = tmp_path / "pred.csv"
        assert run_cli("classify", "--model", model, "--data", empty, "--out", pred) == 0
        assert pred.read_text().strip() == "label"

    def test_model_json_round_trip_identical_predictions(self, sim_dir, tmp_path):
        from funbayes import load_model, predict, save_model

        model_path = tmp_path / "model.json"
        run_cli("train", "--method", "bct", "--data", sim_dir / "train.csv", "--J", 3, "--model", model_path)
        model = load_model(model_path)
        rng = np.random.default_rng(0)
        probe = rng.standard_normal((1000, 51))
        again = tmp_path / "model2.json"
        save_model(model, again)
        model2 = load_model(again)
        assert np.array_equal(predict(model, probe), predict(model2, probe))


class TestBenchmarkCommand:
    def write_plan(self, path, workers=1):
        plan = {
            "scenarios": [{"label": "SDSN", "n_train": 40, "n_test": 30}],
            "methods": ["cen", "bc"],
            "repetitions": 2,
            "seed": 5,
            "folds": 4,
            "parallelism": workers,
            "cv_select": True,
        }
        path.write_text(json.dumps(plan))
        return path

    def test_smoke_and_exit_zero(self, tmp_path):
        plan = self.write_plan(tmp_path / "plan.json")
        out = tmp_path / "report.csv"
        long_out = tmp_path / "long.csv"
        assert run_cli("benchmark", "--plan", plan, "--out", out, "--long-out", long_out) == 0
        rows = out.read_text().strip().splitlines()
        assert rows[0].startswith("scenario,method,mean_error")
        assert len(rows) == 4  # cen, bc, cv + header

    def test_worker_invariance_bytes(self, tmp_path):
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        p1 = self.write_plan(tmp_path / "p1.json", workers=1)
        p2 = self.write_plan(tmp_path / "p2.json", workers=2)
        assert run_cli("benchmark", "--plan", p1, "--out", out1) == 0
        assert run_cli("benchmark", "--plan", p2, "--out", out2) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_toml_plan(self, tmp_path):
        plan = tmp_path / "plan.toml"
        plan.write_text(
            'scenarios = ["SDSN"]\nmethods = ["cen"]\nrepetitions = 1\nseed = 3\nfolds = 4\n'
            "j_max = 3\n"
        )
        out = tmp_path / "r.csv"
        assert run_cli("benchmark", "--plan", plan, "--out", out) == 0

    def test_bad_plan_is_data_error(self, tmp_path):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps({"methods": ["cen"]}))
        assert run_cli("benchmark", "--plan", plan, "--out", tmp_path / "r.csv") == 2


class TestCurveFormat:
    def test_header_carries_grid(self, tmp_path):
        grid = Grid.regular(0.0, 1.0, 5)
        path = tmp_path / "c.csv"
        write_curves(path, grid, np.zeros((2, 5)), [0, 1])
        g2, curves, labels = read_curves(path)
        assert np.array_equal(g2.points, grid.points)
        assert labels.tolist() == [0, 1]

    def test_unlabeled_round_trip(self, tmp_path):
        grid = Grid.regular(0.0, 1.0, 5)
        path = tmp_path / "c.csv"
        write_curves(path, grid, np.arange(10.0).reshape(2, 5))
        _, curves, labels = read_curves(path)
        assert labels is None
        assert curves[1, 4] == 9.0

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.0,0.5,1.0,label\n1.0,2.0,0\n")
        from funbayes import DataError

        with pytest.raises(DataError):
            read_curves(path)

    def test_non_numeric_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t_1,t_2,t_3\n1,2,3\n")
        from funbayes import DataError

        with pytest.raises(DataError):
            read_curves(path)
