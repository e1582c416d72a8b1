"""Regression scores: MSE, RMSE, R2 and MAE."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import LengthMismatchError, ZeroTargetVarianceError


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    rmse: float
    r2: float | None
    mae: float
    n: int

    def to_dict(self):
        return asdict(self)


def score(y_true, y_pred) -> MetricsReport:
    """Score predictions against targets.

    R2 is ``1 - SSE/SST`` with SST taken about the mean of ``y_true``. When
    ``y_true`` is constant R2 is undefined and ``ZeroTargetVarianceError`` is
    raised; its ``partial`` attribute holds the other three scores.
    """
    y = np.asarray(y_true, dtype=np.float64).ravel()
    p = np.asarray(y_pred, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise LengthMismatchError(f"{y.size} targets vs {p.size} predictions")
    if y.size < 2:
        raise LengthMismatchError("need at least two samples to score")
    n = y.size
    resid = y - p
    sse = float(np.sum(resid * resid))
    mse = sse / n
    mae = float(np.sum(np.abs(resid))) / n
    dev = y - np.mean(y)
    sst = float(np.sum(dev * dev))
    if sst == 0.0:
        raise ZeroTargetVarianceError(MetricsReport(mse, math.sqrt(mse), None, mae, n))
    return MetricsReport(mse, math.sqrt(mse), 1.0 - sse / sst, mae, n)
