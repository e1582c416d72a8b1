"""Driving-cycle tables: CSV ingestion, a synthetic generator and preprocessing.

Every operation is a pure function of its inputs and returns new frames; a
``Frame`` never changes after construction.
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import (
    DataWarning,
    EmptyAfterCleaningError,
    EmptyInputError,
    HeaderMissingError,
    InvalidFractionsError,
    InvalidSizeError,
    NoFeaturesSelectedError,
    SchemaMismatchError,
    TargetColumnMissingError,
    ZeroVarianceFeatureError,
)

__all__ = [
    "Frame",
    "FeatureSelectionReport",
    "StandardizationParams",
    "SplitSpec",
    "load_csv",
    "concat_frames",
    "generate_synthetic",
    "select_features",
    "remove_outliers",
    "fit_standardizer",
    "apply_standardizer",
    "destandardize",
    "split",
]


@dataclass(frozen=True, eq=False)
class Frame:
    """Named-column float64 table with one designated target column.

    ``values`` is stored row-major with shape ``(n_rows, n_columns)`` and is
    made read-only on construction.
    """

    column_names: tuple
    values: np.ndarray
    target_name: str
    dropped_rows: int = 0
    dropped_columns: tuple = ()

    def __post_init__(self):
        names = tuple(str(c) for c in self.column_names)
        object.__setattr__(self, "column_names", names)
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim == 1 and len(names) == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2 or values.shape[1] != len(names):
            raise SchemaMismatchError(
                f"values of shape {values.shape} do not match {len(names)} column names")
        if len(set(names)) != len(names):
            raise SchemaMismatchError("column names must be unique")
        if self.target_name not in names:
            raise TargetColumnMissingError(self.target_name)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dropped_columns", tuple(self.dropped_columns))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def feature_names(self) -> tuple:
        return tuple(c for c in self.column_names if c != self.target_name)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.column_names.index(name)]
        except ValueError:
            raise KeyError(name) from None

    @property
    def X(self) -> np.ndarray:
        idx = [i for i, c in enumerate(self.column_names) if c != self.target_name]
        return self.values[:, idx]

    @property
    def y(self) -> np.ndarray:
        return self.column(self.target_name)

    def take(self, rows) -> "Frame":
        return Frame(self.column_names, self.values[np.asarray(rows)], self.target_name,
                     self.dropped_rows, self.dropped_columns)

    def select_columns(self, names) -> "Frame":
        names = list(names)
        if self.target_name not in names:
            names.append(self.target_name)
        idx = [self.column_names.index(n) for n in names]
        return Frame(tuple(names), self.values[:, idx], self.target_name,
                     self.dropped_rows, self.dropped_columns)

    def with_features(self, X: np.ndarray) -> "Frame":
        """Copy of this frame whose feature block is replaced by ``X``."""
        values = np.array(self.values)
        idx = [i for i, c in enumerate(self.column_names) if c != self.target_name]
        values[:, idx] = X
        return Frame(self.column_names, values, self.target_name,
                     self.dropped_rows, self.dropped_columns)

    def equals(self, other: "Frame") -> bool:
        return (self.column_names == other.column_names
                and self.target_name == other.target_name
                and self.values.shape == other.values.shape
                and self.values.tobytes() == other.values.tobytes())

    def to_csv(self, path, delimiter: str = ","):
        """Write with 17 significant digits so a reload is bit-exact."""
        with open(path, "w", newline="") as fh:
            fh.write(delimiter.join(self.column_names) + "\n")
            np.savetxt(fh, self.values, delimiter=delimiter, fmt="%.17g")


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, delimiter: str = ",", target_name: str = "soc",
             decimal: str = ".", encoding: str | None = None) -> Frame:
    """Parse a headed CSV into a ``Frame``.

    Columns whose values are mostly non-numeric are dropped (with a
    ``DataWarning``); rows with a missing, unparseable or infinite value in a
    retained column are dropped and counted in ``Frame.dropped_rows``.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    read_kw = dict(sep=delimiter, dtype=str, keep_default_na=False, skipinitialspace=True)
    try:
        try:
            raw = pd.read_csv(path, encoding=encoding or "utf-8", **read_kw)
        except UnicodeDecodeError:
            if encoding:
                raise
            raw = pd.read_csv(path, encoding="latin-1", **read_kw)
    except pd.errors.EmptyDataError:
        raise HeaderMissingError(f"{path}: file is empty") from None

    header = [str(c).strip() for c in raw.columns]
    if not header or all(_looks_numeric(h) for h in header):
        raise HeaderMissingError(f"{path}: first row is not a header")
    raw.columns = header
    if target_name not in header:
        raise TargetColumnMissingError(f"{path}: no column named {target_name!r}")

    n = len(raw)
    kept, cols, dropped_columns = [], [], []
    for name in header:
        text = raw[name].str.strip()
        if decimal != ".":
            text = text.str.replace(decimal, ".", regex=False)
        parsed = pd.to_numeric(text, errors="coerce").to_numpy(dtype=np.float64)
        # pandas' fast parser can be off by an ulp; reparse valid cells exactly
        ok = ~np.isnan(parsed)
        if ok.any():
            parsed[ok] = text.to_numpy(dtype=object)[ok].astype(np.float64)
        n_ok = int(np.isfinite(parsed).sum())
        if name != target_name and n > 0 and n_ok * 2 < n:
            dropped_columns.append(name)
            warnings.warn(f"{path}: dropping non-numeric column {name!r}", DataWarning,
                          stacklevel=2)
            continue
        kept.append(name)
        cols.append(parsed)

    values = np.column_stack(cols) if cols else np.empty((n, 0))
    good = np.isfinite(values).all(axis=1)
    values = values[good]
    if values.shape[0] == 0:
        raise EmptyAfterCleaningError(f"{path}: no rows left after cleaning")
    return Frame(tuple(kept), values, target_name,
                 dropped_rows=int(n - good.sum()), dropped_columns=tuple(dropped_columns))


def concat_frames(frames) -> Frame:
    """Stack frames row-wise on the columns they all share (first frame's order)."""
    frames = list(frames)
    if not frames:
        raise EmptyInputError("no frames to concatenate")
    common = [c for c in frames[0].column_names
              if all(c in f.column_names for f in frames[1:])]
    parts = [f.select_columns(common).values for f in frames]
    dropped_cols = sorted({c for f in frames for c in f.column_names if c not in common}
                          | {c for f in frames for c in f.dropped_columns})
    return Frame(tuple(common), np.vstack(parts), frames[0].target_name,
                 dropped_rows=sum(f.dropped_rows for f in frames),
                 dropped_columns=tuple(dropped_cols))


SYNTHETIC_SIGNALS = ("current_a", "voltage_v", "temperature_c", "power_kw", "speed_kmh",
                     "elapsed_s")
CAPACITY_AH = 60.0
N_CELLS = 96
PACK_RESISTANCE = 0.12
SAMPLE_PERIOD_S = 2.0


def _cell_ocv(s):
    # flat plateau with steep knees near empty and full
    return 3.30 + 0.70 * s - 0.35 * np.exp(-8.0 * s) + 0.15 * np.exp(-10.0 * (1.0 - s))


def generate_synthetic(n_rows: int, n_features: int, seed: int, trip_length: int = 500,
                       n_spikes: int = 0) -> Frame:
    """Seeded driving-cycle-like data with a coulomb-counted SOC target.

    Rows come in contiguous trips of ``trip_length`` samples (the last trip may
    be shorter). Within a trip SOC never increases and always stays in
    [0, 100]. The first ``n_features`` columns are drawn from the physical
    signals in ``SYNTHETIC_SIGNALS`` and then pure-noise distractors.
    ``n_spikes`` rows get one physical signal pushed ten standard deviations
    away from its mean.
    """
    if n_rows < 10 or n_features < 3:
        raise InvalidSizeError(f"need n_rows >= 10 and n_features >= 3, got {n_rows}, {n_features}")
    if trip_length < 2:
        raise InvalidSizeError("trip_length must be at least 2")
    rng = np.random.default_rng(seed)

    signals = {name: [] for name in SYNTHETIC_SIGNALS}
    soc_parts = []
    for start in range(0, n_rows, trip_length):
        length = min(trip_length, n_rows - start)
        soc0 = rng.uniform(30.0, 100.0)
        mean_current = rng.uniform(15.0, 90.0)
        ambient = rng.uniform(-5.0, 30.0)

        shocks = rng.normal(0.0, 12.0, length)
        current = np.empty(length)
        level = mean_current
        for i in range(length):
            level = mean_current + 0.9 * (level - mean_current) + shocks[i]
            current[i] = level
        current = np.clip(current, 0.0, 250.0)

        drawn_ah = np.concatenate(([0.0], np.cumsum(current[:-1]))) * SAMPLE_PERIOD_S / 3600.0
        soc_true = np.clip(soc0 - 100.0 * drawn_ah / CAPACITY_AH, 0.0, 100.0)
        soc = np.clip(soc_true + rng.uniform(-0.05, 0.05, length), 0.0, 100.0)
        soc_parts.append(np.minimum.accumulate(soc))

        heat = np.cumsum(current ** 2) * SAMPLE_PERIOD_S * 2e-6
        temperature = ambient + heat
        # cold packs have higher internal resistance
        resistance = PACK_RESISTANCE * np.exp(-0.03 * (temperature - 25.0))
        voltage = (N_CELLS * _cell_ocv(soc_true / 100.0) - resistance * current
                   + rng.normal(0.0, 0.2, length))
        signals["current_a"].append(current + rng.normal(0.0, 0.5, length))
        signals["voltage_v"].append(voltage)
        signals["temperature_c"].append(temperature + rng.normal(0.0, 0.1, length))
        signals["power_kw"].append(voltage * current / 1000.0)
        signals["speed_kmh"].append(np.clip(1.1 * current + rng.normal(0.0, 3.0, length), 0.0, None))
        signals["elapsed_s"].append(np.arange(length) * SAMPLE_PERIOD_S)

    names = list(SYNTHETIC_SIGNALS[:n_features])
    columns = [np.concatenate(signals[n]) for n in names]
    for i in range(n_features - len(names)):
        names.append(f"noise_{i}")
        columns.append(rng.normal(0.0, 1.0, n_rows))

    X = np.column_stack(columns)
    if n_spikes:
        if n_spikes > n_rows:
            raise InvalidSizeError("more spikes than rows")
        rows = rng.choice(n_rows, size=n_spikes, replace=False)
        n_physical = min(n_features, len(SYNTHETIC_SIGNALS))
        cols = rng.integers(0, n_physical, size=n_spikes)
        mean, std = X.mean(axis=0), X.std(axis=0)
        signs = rng.choice([-1.0, 1.0], size=n_spikes)
        X[rows, cols] = mean[cols] + signs * 10.0 * std[cols]

    values = np.column_stack([X, np.concatenate(soc_parts)])
    return Frame(tuple(names) + ("soc",), values, "soc")


@dataclass
class FeatureSelectionReport:
    selected: list
    dropped: list
    correlation: dict
    variance: dict
    corr_threshold: float = 0.0
    variance_threshold: float = 0.0

    def to_dict(self):
        return {
            "corr_threshold": self.corr_threshold,
            "variance_threshold": self.variance_threshold,
            "selected": list(self.selected),
            "dropped": [{"feature": n, "reason": r} for n, r in self.dropped],
            "correlation": dict(self.correlation),
            "variance": dict(self.variance),
        }


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    if denom == 0.0:
        return 0.0
    return float(min(1.0, max(-1.0, np.dot(dx, dy) / denom)))


def select_features(frame: Frame, corr_threshold: float = 0.05,
                    variance_threshold: float = 1e-8):
    """Keep features with variance above ``variance_threshold`` and
    ``|pearson r| >= corr_threshold`` against the target."""
    if frame.n_rows < 2:
        raise EmptyInputError("feature selection needs at least two rows")
    y = frame.y
    selected, dropped, corr, var = [], [], {}, {}
    for name in frame.feature_names:
        x = frame.column(name)
        v = float(np.var(x))
        r = _pearson(x, y)
        var[name], corr[name] = v, r
        if v <= variance_threshold:
            dropped.append((name, "zero variance" if v == 0.0 else "low variance"))
        elif abs(r) < corr_threshold:
            dropped.append((name, "low correlation"))
        else:
            selected.append(name)
    report = FeatureSelectionReport(selected, dropped, corr, var, corr_threshold,
                                    variance_threshold)
    if not selected:
        raise NoFeaturesSelectedError(
            f"no feature passes |r| >= {corr_threshold} and variance > {variance_threshold}")
    return frame.select_columns(selected), report


def remove_outliers(frame: Frame, z_threshold: float = 3.0):
    """Drop rows where any feature has ``|z| > z_threshold``.

    z-scores use each column's full-frame mean and population std; a column
    with zero std contributes z = 0.
    """
    if frame.n_rows < 2:
        raise EmptyInputError("outlier removal needs at least two rows")
    if not z_threshold > 0:
        raise ValueError("z_threshold must be positive")
    X = frame.X
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    z = np.where(std > 0, (X - mean) / safe, 0.0)
    keep = ~(np.abs(z) > z_threshold).any(axis=1)
    removed = int(frame.n_rows - keep.sum())
    if removed == frame.n_rows:
        raise EmptyAfterCleaningError("every row was flagged as an outlier")
    return frame.take(np.flatnonzero(keep)), removed


@dataclass(frozen=True, eq=False)
class StandardizationParams:
    features: tuple
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self):
        return {"features": list(self.features), "mean": self.mean.tolist(),
                "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["features"]), np.asarray(d["mean"], dtype=np.float64),
                   np.asarray(d["std"], dtype=np.float64))


def fit_standardizer(train: Frame) -> StandardizationParams:
    """Per-feature mean and population std of ``train``."""
    if train.n_rows == 0:
        raise EmptyInputError("cannot fit a standardizer on zero rows")
    X = train.X
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    for name, s in zip(train.feature_names, std):
        if not s > 0:
            raise ZeroVarianceFeatureError(name)
    return StandardizationParams(train.feature_names, mean, std)


def apply_standardizer(frame: Frame, params: StandardizationParams) -> Frame:
    if frame.feature_names != tuple(params.features):
        raise SchemaMismatchError(
            f"frame features {frame.feature_names} differ from fitted {tuple(params.features)}")
    return frame.with_features((frame.X - params.mean) / params.std)


def destandardize(Z: np.ndarray, params: StandardizationParams) -> np.ndarray:
    return params.mean + params.std * Z


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.70
    val_fraction: float = 0.15
    test_fraction: float = 0.15
    shuffle_seed: int = 0

    def __post_init__(self):
        fr = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(not f > 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
            raise InvalidFractionsError(f"fractions must be positive and sum to 1, got {fr}")

    def sizes(self, n: int):
        n_val = math.floor(self.val_fraction * n)
        n_test = math.floor(self.test_fraction * n)
        return n - n_val - n_test, n_val, n_test

    def to_dict(self):
        return {"train_fraction": self.train_fraction, "val_fraction": self.val_fraction,
                "test_fraction": self.test_fraction, "shuffle_seed": self.shuffle_seed}


def split_indices(n: int, spec: SplitSpec):
    if n == 0:
        raise EmptyInputError("cannot split an empty frame")
    order = np.random.default_rng(spec.shuffle_seed).permutation(n)
    n_train, n_val, _ = spec.sizes(n)
    return order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:]


def split(frame: Frame, spec: SplitSpec):
    """Seeded shuffle, then contiguous train/val/test partitions.

    Validation and test sizes are ``floor(fraction * n)``; the remainder goes
    to train.
    """
    tr, va, te = split_indices(frame.n_rows, spec)
    return frame.take(tr), frame.take(va), frame.take(te)
