"""Train the seven estimators, score them and assemble the comparison report."""
from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, SubsetTooLargeError, ZeroTargetVarianceError
from .linear import LassoRegression, LinearRegression
from .metrics import MetricsReport, score
from .neural import NeuralRegressor
from .nn.training import TrainConfig
from .pipeline import Artifact
from .selection import grid_search
from .tree import DecisionTreeRegressor

# Row set and display names of the comparison table.
MODEL_NAMES = {
    "tree": "Decision Tree",
    "mlp": "Neural Network Regression",
    "full": "Transformer (Self-Attention + Positional Encoding)",
    "attention": "Transformer (Self-Attention)",
    "linear": "Linear Regression",
    "lasso": "Lasso Regression",
    "positional": "Transformer (Positional Encoding)",
}
ALL_MODELS = tuple(MODEL_NAMES)
ALIASES = {"dt": "tree", "decision_tree": "tree", "nn": "mlp", "lr": "linear", "ols": "linear",
           "transformer": "full", "self_attention": "attention", "positional_encoding": "positional"}
BASELINES = {"linear": LinearRegression, "lasso": LassoRegression, "tree": DecisionTreeRegressor}
NEURAL = ("mlp", "full", "attention", "positional")

# External bagging random forest trained on 32,067 rows of the same data.
EXTERNAL_BASELINE = {"n_rows": 32067, "mae": 0.280, "rmse": 0.519}


def resolve_models(names):
    out = []
    for name in names:
        key = ALIASES.get(name.strip().lower(), name.strip().lower())
        if key not in MODEL_NAMES:
            raise InvalidConfigError(f"unknown model {name!r}; choose from {', '.join(ALL_MODELS)}")
        if key not in out:
            out.append(key)
    return out


def _family(key, cfg):
    seed = cfg["seed"]
    if key in BASELINES:
        return BASELINES[key]
    t = cfg["train"]
    tc = TrainConfig(t["epochs"], t["batch_size"], t["patience"], seed, t["min_delta"])
    transformer = cfg["transformer"] if key != "mlp" else None

    def make(**params):
        tcfg = dict(transformer or {})
        lr = params.pop("learning_rate", t["learning_rate"])
        tcfg.update(params)
        return NeuralRegressor(key, tc, lr, seed, tcfg if key != "mlp" else None)
    return make


def fit_model(key, train, val, cfg):
    """Fit one estimator; returns ``(model, cv_result_or_None)``.

    Baselines are tuned by k-fold grid search on the training split and then
    refitted on all of it. Neural models train on the training split with
    the validation split driving early stopping; they are grid searched only
    when ``neural_grid_search`` is on.
    """
    family = _family(key, cfg)
    cv = None
    params = {}
    if key in BASELINES:
        cv = grid_search(family, cfg["grids"].get(key, {}), train.X, train.y, cfg["kfold"],
                         cfg["seed"])
        params = cv.best_candidate
    elif cfg["neural_grid_search"] and cfg["neural_grids"].get(key):
        cv = grid_search(family, cfg["neural_grids"][key], train.X, train.y, cfg["kfold"],
                         cfg["seed"])
        params = cv.best_candidate
    model = family(**dict(params))
    if key in BASELINES:
        model.fit(train.X, train.y)
    else:
        model.fit(train.X, train.y, val.X, val.y)
    return model, cv


def _score(y, pred) -> MetricsReport:
    try:
        return score(y, pred)
    except ZeroTargetVarianceError as exc:
        return exc.partial


@dataclass
class BenchmarkReport:
    rows: list
    manifest: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)

    def sorted_rows(self):
        ok = [r for r in self.rows if r["status"] == "ok"]
        failed = [r for r in self.rows if r["status"] != "ok"]
        return sorted(ok, key=lambda r: r["test"]["mse"]) + failed

    def to_dict(self):
        return {"rows": self.sorted_rows()}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def render(self, split="test"):
        return render_table(self.sorted_rows(), split)


def _fmt(x):
    return "-" if x is None else f"{x:.4f}"


def render_table(rows, split="test"):
    """Aligned text table; every value is printed with four decimals."""
    header = ["Model", "MSE", "RMSE", "R2", "MAE"]
    body = []
    for r in rows:
        if r["status"] != "ok":
            body.append([r["name"]] + ["FAILED"] * 4)
            continue
        m = r[split]
        line = [r["name"], _fmt(m["mse"]), _fmt(m["rmse"]), _fmt(m["r2"]), _fmt(m["mae"])]
        if "baseline" in r:
            b = r["baseline"]
            line.append("RMSE " + ("pass" if b["rmse_pass"] else "fail")
                        + " / MAE " + ("pass" if b["mae_pass"] else "fail"))
        body.append(line)
    if any(len(b) == 6 for b in body):
        header.append(f"vs RF (RMSE<={EXTERNAL_BASELINE['rmse']}, MAE<={EXTERNAL_BASELINE['mae']})")
    widths = [max(len(str(row[i])) for row in [header] + body if i < len(row))
              for i in range(len(header))]
    lines = [f"[{split} split]"]
    for row in [header] + body:
        cells = [str(c).ljust(widths[0]) if i == 0 else str(c).rjust(widths[i])
                 for i, c in enumerate(row)]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def run_benchmark(artifact: Artifact, models, cfg) -> BenchmarkReport:
    """Fit and score each requested model; a failing model becomes a FAILED row."""
    rows, timings, predictions = [], {}, {}
    for key in resolve_models(models):
        start = time.perf_counter()
        row = {"key": key, "name": MODEL_NAMES[key]}
        try:
            model, cv = fit_model(key, artifact.train, artifact.val, cfg)
            pred_val = model.predict(artifact.val.X)
            pred_test = model.predict(artifact.test.X)
            row.update(status="ok",
                       val=_score(artifact.val.y, pred_val).to_dict(),
                       test=_score(artifact.test.y, pred_test).to_dict(),
                       cv=cv.to_dict() if cv else None)
            if isinstance(model, NeuralRegressor):
                row["history"] = model.history_.to_dict()
            predictions[key] = (artifact.test.y, pred_test)
        except Exception as exc:  # report-and-continue
            row.update(status="FAILED", error=f"{type(exc).__name__}: {exc}")
        timings[key] = time.perf_counter() - start
        rows.append(row)
    manifest = {"models": list(resolve_models(models)), "config": cfg,
                "wall_clock_seconds": timings}
    return BenchmarkReport(rows, manifest, predictions)


def subset_indices(sizes, n, seed):
    """Per-split seeded row choices summing to ``n``, proportional to split sizes.

    Requesting every row returns each split unchanged.
    """
    total = sum(sizes.values())
    if n > total:
        raise SubsetTooLargeError(f"requested {n} rows but only {total} are available")
    if n < 1:
        raise SubsetTooLargeError("subset size must be positive")
    counts = {k: math.floor(n * s / total) for k, s in sizes.items() if k != "train"}
    counts["train"] = n - sum(counts.values())
    rng = np.random.default_rng(seed)
    out = {}
    for k in ("train", "val", "test"):
        size, c = sizes[k], counts[k]
        if c >= size:
            out[k] = np.arange(size)
        else:
            out[k] = np.sort(rng.choice(size, size=c, replace=False))
    return out


def run_subset(artifact: Artifact, n, seed, models, cfg) -> BenchmarkReport:
    sizes = {k: f.n_rows for k, f in artifact.splits().items()}
    idx = subset_indices(sizes, n, seed)
    sub = Artifact(artifact.train.take(idx["train"]), artifact.val.take(idx["val"]),
                   artifact.test.take(idx["test"]), artifact.manifest)
    report = run_benchmark(sub, models, cfg)
    for row in report.rows:
        if row["status"] == "ok":
            row["baseline"] = {
                "rmse_threshold": EXTERNAL_BASELINE["rmse"],
                "mae_threshold": EXTERNAL_BASELINE["mae"],
                "rmse_pass": row["test"]["rmse"] <= EXTERNAL_BASELINE["rmse"],
                "mae_pass": row["test"]["mae"] <= EXTERNAL_BASELINE["mae"],
            }
    report.manifest["subset"] = {"n": n, "seed": seed,
                                 "indices": {k: v.tolist() for k, v in idx.items()}}
    return report


def write_trace(path, actual, predicted):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "actual_soc", "predicted_soc"])
        for i, (a, p) in enumerate(zip(actual, predicted)):
            w.writerow([i, repr(float(a)), repr(float(p))])


def write_report(report: BenchmarkReport, out_dir, artifact: Artifact, extra_manifest=None):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(report.to_json())
    with open(os.path.join(out_dir, "report.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "status", "split", "mse", "rmse", "r2", "mae", "n"])
        for r in report.sorted_rows():
            for split in ("test", "val"):
                if r["status"] != "ok":
                    w.writerow([r["name"], r["status"], split, "", "", "", "", ""])
                    continue
                m = r[split]
                w.writerow([r["name"], "ok", split] + [
                    "" if m[k] is None else repr(m[k]) for k in ("mse", "rmse", "r2", "mae")]
                    + [m["n"]])
    for key, (actual, pred) in report.predictions.items():
        write_trace(os.path.join(out_dir, f"trace_{key}.csv"), actual, pred)
    manifest = {"preprocess": artifact.manifest, **report.manifest, **(extra_manifest or {})}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
