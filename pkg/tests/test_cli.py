import csv
import json
import math

import numpy as np
import pytest

from oracles import zscore_outlier_rows
from socbench import bench
from socbench.cli import load_model, main
from socbench.data import generate_synthetic, select_features
from socbench.pipeline import read_artifact

FAST = {"train": {"epochs": 8, "batch_size": 200},
        "transformer": {"d_model": 8, "n_heads": 2, "hidden_units": 16}}


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "fast.json"
    cfg.write_text(json.dumps(FAST))
    data = root / "data"
    assert run("preprocess", "--synthetic", 2000, "--seed", 3, "--spikes", 12,
               "--out", data) == 0
    out = root / "bench"
    assert run("benchmark", "--data", data, "--all", "--config", cfg, "--out", out) == 0
    return root, cfg, data, out


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_preprocess_manifest_and_spike_count(workspace):
    _, _, data, _ = workspace
    m = json.loads((data / "manifest.json").read_text())
    raw = generate_synthetic(2000, 10, seed=3, n_spikes=12)
    selected, _ = select_features(raw)
    assert m["outliers"]["removed"] == len(zscore_outlier_rows(selected.X, 3.0))
    assert m["n_selected_features"] == len(m["selection"]["selected"])
    sizes = m["split"]["sizes"]
    assert sum(sizes.values()) == m["outliers"]["rows_after"]
    art = read_artifact(data)
    assert art.train.n_rows == sizes["train"]
    assert np.all(np.abs(art.train.X.mean(axis=0)) < 1e-10)


def test_preprocess_twice_is_identical(workspace, tmp_path):
    _, _, data, _ = workspace
    again = tmp_path / "again"
    assert run("preprocess", "--synthetic", 2000, "--seed", 3, "--spikes", 12,
               "--out", again) == 0
    for name in ("manifest.json", "train.csv", "val.csv", "test.csv"):
        assert (again / name).read_bytes() == (data / name).read_bytes()


def test_from_manifest_rebuilds_artifact(workspace, tmp_path):
    _, _, data, _ = workspace
    assert run("preprocess", "--from-manifest", data / "manifest.json",
               "--out", tmp_path / "r") == 0
    assert (tmp_path / "r" / "train.csv").read_bytes() == (data / "train.csv").read_bytes()


def test_all_seven_rows(workspace, capsys):
    _, _, _, out = workspace
    report = json.loads((out / "report.json").read_text())
    names = [r["name"] for r in report["rows"]]
    assert sorted(names) == sorted(bench.MODEL_NAMES.values())
    assert all(r["status"] == "ok" for r in report["rows"])
    mses = [r["test"]["mse"] for r in report["rows"]]
    assert mses == sorted(mses)
    for split in ("test", "val"):
        for r in report["rows"]:
            m = r[split]
            assert f"{m['rmse']:.4f}" == f"{math.sqrt(m['mse']):.4f}"


def test_rendered_table_matches_json(workspace):
    _, _, _, out = workspace
    report = json.loads((out / "report.json").read_text())
    text = bench.render_table(report["rows"], "test").splitlines()
    assert text[0] == "[test split]" and text[1].split()[-4:] == ["MSE", "RMSE", "R2", "MAE"]
    for line, row in zip(text[2:], report["rows"]):
        assert line.startswith(row["name"])
        cells = line[len(row["name"]):].split()
        assert cells[0] == f"{row['test']['mse']:.4f}"
        assert float(cells[0]) == round(row["test"]["mse"], 4)
        assert cells[2] == f"{row['test']['r2']:.4f}"


def test_report_csv_and_manifest(workspace):
    _, _, _, out = workspace
    rows = read_rows(out / "report.csv")
    assert len(rows) == 14 and {r["split"] for r in rows} == {"test", "val"}
    m = json.loads((out / "manifest.json").read_text())
    assert set(m["wall_clock_seconds"]) == set(bench.MODEL_NAMES)
    assert m["preprocess"]["seed"] == 3
    assert "wall_clock" not in (out / "report.json").read_text()


def test_traces_match_reported_mse(workspace):
    _, _, data, out = workspace
    report = json.loads((out / "report.json").read_text())
    n_test = read_artifact(data).test.n_rows
    for row in report["rows"]:
        trace = read_rows(out / f"trace_{row['key']}.csv")
        assert len(trace) == n_test
        a = np.array([float(t["actual_soc"]) for t in trace])
        p = np.array([float(t["predicted_soc"]) for t in trace])
        assert abs(np.mean((a - p) ** 2) - row["test"]["mse"]) <= 1e-12 * max(1, row["test"]["mse"])


def test_single_model(workspace, tmp_path, capsys):
    _, cfg, data, _ = workspace
    assert run("benchmark", "--data", data, "--models", "tree", "--out", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert [r["name"] for r in report["rows"]] == ["Decision Tree"]
    table = capsys.readouterr().out.split("\n\n")[0].splitlines()
    assert len(table) == 3


def test_plot_data_matches_benchmark(workspace, tmp_path):
    _, cfg, data, out = workspace
    assert run("plot-data", "--data", data, "--model", "lasso", "--config", cfg,
               "--out", tmp_path) == 0
    assert (tmp_path / "trace_lasso.csv").read_bytes() == (out / "trace_lasso.csv").read_bytes()


def test_plot_data_perfect_tree(tmp_path):
    # noiseless target of discrete features; every test row also occurs in train
    rng = np.random.default_rng(0)
    x = rng.integers(0, 6, size=(600, 2)).astype(float)
    y = 10.0 * x[:, 0] + 3.0 * x[:, 1]
    path = tmp_path / "d.csv"
    np.savetxt(path, np.column_stack([x, y]), delimiter=",", header="a,b,soc", comments="",
               fmt="%.17g")
    assert run("preprocess", "--input", path, "--out", tmp_path / "d") == 0
    assert run("plot-data", "--data", tmp_path / "d", "--model", "tree",
               "--out", tmp_path / "p") == 0
    trace = read_rows(tmp_path / "p" / "trace_tree.csv")
    assert all(t["actual_soc"] == t["predicted_soc"] for t in trace)


def test_subset_full_size_is_benchmark(workspace, tmp_path):
    _, cfg, data, out = workspace
    total = sum(json.loads((data / "manifest.json").read_text())["split"]["sizes"].values())
    assert run("subset", "--data", data, "--n", total, "--models", "tree,lasso",
               "--config", cfg, "--out", tmp_path) == 0
    sub = json.loads((tmp_path / "report.json").read_text())["rows"]
    full = {r["key"]: r for r in json.loads((out / "report.json").read_text())["rows"]}
    for r in sub:
        assert r["test"] == full[r["key"]]["test"] and r["val"] == full[r["key"]]["val"]
        assert r["baseline"]["rmse_threshold"] == 0.519
        assert r["baseline"]["mae_threshold"] == 0.280


def test_subset_indices_deterministic():
    sizes = {"train": 700, "val": 150, "test": 150}
    a = bench.subset_indices(sizes, 500, seed=4)
    b = bench.subset_indices(sizes, 500, seed=4)
    assert all(np.array_equal(a[k], b[k]) for k in sizes)
    assert sum(len(v) for v in a.values()) == 500
    c = bench.subset_indices(sizes, 500, seed=5)
    assert not np.array_equal(a["train"], c["train"])
    with pytest.raises(Exception, match="only 1000"):
        bench.subset_indices(sizes, 1001, seed=0)


def test_subset_too_large_exits_2(workspace, capsys):
    _, _, data, _ = workspace
    assert run("subset", "--data", data, "--n", 10**7, "--models", "tree") == 2
    assert "error" in capsys.readouterr().err


def test_train_and_evaluate(workspace, tmp_path, capsys):
    _, cfg, data, out = workspace
    for key in ("tree", "lasso", "linear", "mlp"):
        assert run("train", "--data", data, "--model", key, "--config", cfg,
                   "--out", tmp_path) == 0
        doc, model = load_model(tmp_path / f"model_{key}.json")
        assert doc["model"] == key
        assert run("evaluate", "--data", data, "--model-file", tmp_path / f"model_{key}.json",
                   "--out", tmp_path) == 0
        ev = json.loads((tmp_path / f"eval_{key}.json").read_text())
        full = {r["key"]: r for r in json.loads((out / "report.json").read_text())["rows"]}
        assert ev["test"]["mse"] == pytest.approx(full[key]["test"]["mse"], rel=1e-12)
    assert (tmp_path / "cv_tree.csv").exists() and (tmp_path / "history_mlp.csv").exists()


def test_failed_model_does_not_abort(workspace, tmp_path):
    _, _, data, _ = workspace
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"transformer": {"d_model": 6, "n_heads": 4}}))
    assert run("benchmark", "--data", data, "--models", "tree,attention", "--config", bad,
               "--out", tmp_path / "o") == 0
    rows = json.loads((tmp_path / "o" / "report.json").read_text())["rows"]
    assert [r["status"] for r in rows] == ["ok", "FAILED"]
    assert "HeadDivisibility" in rows[1]["error"]
    assert "FAILED" in (tmp_path / "o" / "report.csv").read_text()


def test_harness_errors(tmp_path, capsys):
    assert run("benchmark", "--data", tmp_path / "missing", "--all") == 2
    assert run("preprocess", "--input", tmp_path / "missing.csv", "--out", tmp_path) == 2
    bad = tmp_path / "c.json"
    bad.write_text(json.dumps({"no_such_key": 1}))
    assert run("preprocess", "--synthetic", 100, "--config", bad, "--out", tmp_path) == 2
    with pytest.raises(SystemExit):
        run("benchmark", "--bogus")
