"""End-to-end preprocessing and the on-disk artifact it produces.

An artifact directory holds ``train.csv``, ``val.csv``, ``test.csv`` (features
already standardized) and ``manifest.json``, which records everything needed
to rebuild the artifact bit-exactly.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from .config import config_hash
from .data import (
    Frame,
    SplitSpec,
    apply_standardizer,
    concat_frames,
    fit_standardizer,
    generate_synthetic,
    load_csv,
    remove_outliers,
    select_features,
    split,
)
from .errors import SocBenchError

SPLITS = ("train", "val", "test")


class StageError(SocBenchError):
    def __init__(self, stage, cause):
        super().__init__(f"preprocessing failed at stage {stage!r}: {cause}")
        self.stage, self.cause = stage, cause


@dataclass
class Artifact:
    train: Frame
    val: Frame
    test: Frame
    manifest: dict

    def splits(self):
        return {"train": self.train, "val": self.val, "test": self.test}


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_source(source: dict) -> Frame:
    """Build the raw frame described by a manifest ``source`` entry."""
    if source["type"] == "synthetic":
        return generate_synthetic(source["n_rows"], source["n_features"], source["seed"],
                                  n_spikes=source.get("spikes", 0))
    frames = [load_csv(p, source.get("delimiter", ","), source.get("target", "soc"),
                       source.get("decimal", ".")) for p in source["paths"]]
    return frames[0] if len(frames) == 1 else concat_frames(frames)


def synthetic_source(n_rows, seed, n_features=10, spikes=0):
    return {"type": "synthetic", "n_rows": n_rows, "n_features": n_features, "seed": seed,
            "spikes": spikes}


def csv_source(paths, delimiter=",", decimal=".", target="soc"):
    paths = [os.path.abspath(p) for p in paths]
    return {"type": "csv", "paths": paths, "delimiter": delimiter, "decimal": decimal,
            "target": target, "sha256": [_sha256(p) if os.path.exists(p) else None
                                         for p in paths]}


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except SocBenchError as exc:
        raise StageError(name, exc) from exc
    except (FileNotFoundError, ValueError) as exc:
        raise StageError(name, exc) from exc


def preprocess(source: dict, cfg: dict) -> Artifact:
    """select_features -> remove_outliers -> split -> fit/apply standardizer.

    Outlier z-scores always use the whole frame. The standardizer is fitted on
    the training split unless ``cfg["paper_faithful"]`` is set, in which case
    it is fitted on the whole cleaned frame before splitting.
    """
    raw = _stage("load", load_source, source)
    sel = cfg["selection"]
    selected, report = _stage("select_features", select_features, raw,
                              sel["corr_threshold"], sel["variance_threshold"])
    cleaned, removed = _stage("remove_outliers", remove_outliers, selected, cfg["z_threshold"])
    spec = SplitSpec(shuffle_seed=cfg["seed"], **cfg["split"])
    if cfg["paper_faithful"]:
        params = _stage("fit_standardizer", fit_standardizer, cleaned)
        scaled = apply_standardizer(cleaned, params)
        train, val, test = _stage("split", split, scaled, spec)
    else:
        train, val, test = _stage("split", split, cleaned, spec)
        params = _stage("fit_standardizer", fit_standardizer, train)
        train, val, test = (apply_standardizer(f, params) for f in (train, val, test))

    manifest = {
        "source": source,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "target": raw.target_name,
        "load": {"rows": raw.n_rows + raw.dropped_rows, "dropped_rows": raw.dropped_rows,
                 "dropped_columns": list(raw.dropped_columns)},
        "selection": report.to_dict(),
        "n_selected_features": len(report.selected),
        "outliers": {"z_threshold": cfg["z_threshold"], "removed": removed,
                     "rows_after": cleaned.n_rows},
        "split": {**spec.to_dict(), "sizes": {"train": train.n_rows, "val": val.n_rows,
                                              "test": test.n_rows}},
        "standardization": {"fitted_on": "whole frame" if cfg["paper_faithful"] else "train",
                            **params.to_dict()},
    }
    return Artifact(train, val, test, manifest)


def write_artifact(artifact: Artifact, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    for name, frame in artifact.splits().items():
        path = os.path.join(out_dir, f"{name}.csv")
        frame.to_csv(path)
        files[name] = {"file": f"{name}.csv", "sha256": _sha256(path)}
    artifact.manifest["files"] = files
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(artifact.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return artifact.manifest


def read_artifact(data_dir) -> Artifact:
    with open(os.path.join(data_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    target = manifest["target"]
    frames = [load_csv(os.path.join(data_dir, f"{name}.csv"), ",", target) for name in SPLITS]
    return Artifact(*frames, manifest)
