"""k-fold cross-validation and exhaustive grid search."""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidKError, SocBenchError


class CandidateFitError(SocBenchError):
    def __init__(self, params, fold, cause):
        super().__init__(f"fit failed for candidate {params} on fold {fold}: {cause}")
        self.params, self.fold, self.cause = params, fold, cause


def kfold_indices(n: int, k: int, seed: int = 0):
    """Seeded shuffle split into ``k`` folds whose sizes differ by at most one.

    Returns a list of ``(train_idx, val_idx)``; the first ``n % k`` folds get
    the extra row.
    """
    if not 2 <= k <= n:
        raise InvalidKError(f"need 2 <= k <= n, got k={k}, n={n}")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(order, k)
    out = []
    for i, val in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((train, val))
    return out


def expand_grid(grid):
    """All combinations of a ``{name: [values]}`` mapping in enumeration order.

    An empty mapping yields a single empty candidate (fit once with defaults).
    """
    if not grid:
        return [{}]
    names = list(grid)
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]


@dataclass
class CVResult:
    candidates: list
    fold_scores: np.ndarray
    best_index: int
    k: int
    mean_mse: np.ndarray = field(init=False)
    std_mse: np.ndarray = field(init=False)

    def __post_init__(self):
        self.mean_mse = self.fold_scores.mean(axis=1)
        self.std_mse = self.fold_scores.std(axis=1)

    @property
    def best_candidate(self):
        return self.candidates[self.best_index]

    @property
    def best_mean_mse(self):
        return float(self.mean_mse[self.best_index])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["candidate", "params", "fold", "mse"])
            for i, params in enumerate(self.candidates):
                for f in range(self.k):
                    w.writerow([i, _params_text(params), f, repr(float(self.fold_scores[i, f]))])

    def to_dict(self):
        return {"k": self.k, "best_index": self.best_index,
                "best_candidate": _jsonable(self.best_candidate),
                "candidates": [_jsonable(c) for c in self.candidates],
                "mean_mse": self.mean_mse.tolist(), "std_mse": self.std_mse.tolist(),
                "fold_scores": self.fold_scores.tolist()}


def _jsonable(params):
    return {k: v for k, v in params.items()}


def _params_text(params):
    return ";".join(f"{k}={v}" for k, v in params.items()) or "defaults"


def grid_search(family, grid, X, y, k: int = 5, seed: int = 0) -> CVResult:
    """Score every candidate in ``grid`` by mean validation MSE over ``k`` folds.

    ``family(**params)`` must return an unfitted ``Model``; estimators that
    need standardized inputs refit their own scaling on each fold's training
    rows. Ties go to the first-enumerated candidate.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    folds = kfold_indices(len(y), k, seed)
    candidates = expand_grid(grid)
    scores = np.empty((len(candidates), k))
    for c, params in enumerate(candidates):
        for f, (tr, va) in enumerate(folds):
            try:
                model = family(**params).fit(X[tr], y[tr])
            except Exception as exc:
                raise CandidateFitError(params, f, exc) from exc
            resid = y[va] - model.predict(X[va])
            scores[c, f] = float(np.sum(resid * resid)) / len(va)
    mean = scores.mean(axis=1)
    best = int(np.argmin(mean))
    return CVResult(candidates, scores, best, k)
