"""Run configuration: defaults, JSON file overrides and hashing."""
from __future__ import annotations

import copy
import hashlib
import json

from .errors import InvalidConfigError

DEFAULTS = {
    "seed": 0,
    "split": {"train_fraction": 0.70, "val_fraction": 0.15, "test_fraction": 0.15},
    "selection": {"corr_threshold": 0.05, "variance_threshold": 1e-8},
    "z_threshold": 3.0,
    "paper_faithful": False,
    "kfold": 5,
    "grids": {
        "linear": {},
        "lasso": {"alpha": [0.001, 0.01, 0.1, 1.0, 10.0]},
        "tree": {"max_depth": [4, 8, 16, 32, None]},
    },
    "train": {"epochs": 100, "batch_size": 1000, "patience": 5, "min_delta": 0.0,
              "learning_rate": 0.001},
    "transformer": {"d_model": 32, "n_heads": 4, "dropout_rate": 0.1, "hidden_units": 64,
                    "positional": "sinusoidal"},
    "neural_grid_search": False,
    "neural_grids": {},
}


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise InvalidConfigError(f"unknown config key {key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict) and key not in (
                "grids", "neural_grids"):
            out[key] = merge(base[key], value)
        elif key in ("grids", "neural_grids"):
            out[key] = {**out[key], **copy.deepcopy(value)}
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path=None, **overrides) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        with open(path) as fh:
            cfg = merge(cfg, json.load(fh))
    return merge(cfg, {k: v for k, v in overrides.items() if v is not None})


def config_hash(obj) -> str:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]
