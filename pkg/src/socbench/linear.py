"""Ordinary least squares and coordinate-descent lasso."""
from __future__ import annotations

import warnings

import numpy as np

from .base import Model
from .errors import (
    ConvergenceWarning,
    DimensionMismatchError,
    NotStandardizedError,
    RankDeficientWarning,
    TooFewSamplesError,
)

STANDARDIZED_ATOL = 1e-6


def _as_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2:
        raise DimensionMismatchError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"{X.shape[0]} rows in X but {y.shape[0]} targets")
    return X, y


def linear_predict(model, X) -> np.ndarray:
    """``intercept + X @ coef``."""
    X = np.asarray(X, dtype=np.float64)
    coef = np.asarray(model.coef_)
    if X.ndim != 2 or X.shape[1] != coef.shape[0]:
        raise DimensionMismatchError(f"expected {coef.shape[0]} features, got shape {X.shape}")
    return model.intercept_ + X @ coef


class LinearRegression(Model):
    """Multivariate OLS; the univariate straight-line fit is the p=1 case."""

    name = "linear"

    def __init__(self):
        self.intercept_ = None
        self.coef_ = None
        self.rank_deficient_ = False

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = _as_xy(X, y)
        n, p = X.shape
        if n <= p:
            raise TooFewSamplesError(f"OLS needs more rows than features ({n} <= {p})")
        x_mean = X.mean(axis=0)
        y_mean = float(np.mean(y))
        Xc = X - x_mean
        gram = Xc.T @ Xc
        rhs = Xc.T @ (y - y_mean)

        self.rank_deficient_ = False
        trace = float(np.trace(gram))
        if trace == 0.0:
            coef = np.zeros(p)
            self.rank_deficient_ = p > 0
        else:
            try:
                if np.linalg.cond(gram) > 1e12:
                    raise np.linalg.LinAlgError("ill-conditioned")
                chol = np.linalg.cholesky(gram)
            except np.linalg.LinAlgError:
                self.rank_deficient_ = True
                jitter = 1e-10 * trace / p
                chol = np.linalg.cholesky(gram + jitter * np.eye(p))
            coef = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
        if self.rank_deficient_:
            warnings.warn("singular Gram matrix; solved with ridge jitter", RankDeficientWarning,
                          stacklevel=2)
        self.coef_ = coef
        self.intercept_ = y_mean - float(x_mean @ coef)
        self.n_features_ = p
        return self

    def predict(self, X):
        return linear_predict(self, self._check_X(X))

    def to_dict(self):
        return {"kind": "linear", "intercept": self.intercept_, "coef": self.coef_.tolist(),
                "rank_deficient": self.rank_deficient_}

    @classmethod
    def from_dict(cls, d):
        m = cls()
        m.intercept_ = float(d["intercept"])
        m.coef_ = np.asarray(d["coef"], dtype=np.float64)
        m.rank_deficient_ = bool(d.get("rank_deficient", False))
        m.n_features_ = m.coef_.shape[0]
        return m


def ols_fit(X, y) -> LinearRegression:
    return LinearRegression().fit(X, y)


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def lambda_max(X, y) -> float:
    """Smallest penalty at which every lasso coefficient is zero."""
    X, y = _as_xy(X, y)
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    r = y - np.mean(y)
    return float(max(abs(Xc[:, j] @ r / n) for j in range(X.shape[1])))


def lasso_objective(X, y, intercept, coef, lam) -> float:
    r = np.asarray(y) - intercept - np.asarray(X) @ coef
    return float(r @ r) / (2 * len(r)) + lam * float(np.sum(np.abs(coef)))


class LassoModel(Model):
    name = "lasso"

    def __init__(self, lam=0.0, tol=1e-6, max_iter=10_000):
        self.lam = lam
        self.tol = tol
        self.max_iter = max_iter
        self.intercept_ = None
        self.coef_ = None
        self.converged_ = False
        self.n_iter_ = 0

    def predict(self, X):
        return linear_predict(self, self._check_X(X))

    def to_dict(self):
        return {"kind": "lasso_core", "intercept": self.intercept_, "coef": self.coef_.tolist(),
                "lambda": self.lam, "tol": self.tol, "converged": self.converged_,
                "n_iter": self.n_iter_}


def lasso_fit(X, y, lam: float, tol: float = 1e-6, max_iter: int = 10_000) -> LassoModel:
    """Minimise ``SSE/(2n) + lam * sum|beta_j|`` with an unpenalised intercept.

    Columns of ``X`` must already be standardized. Coordinates are swept in
    ascending order until the largest coefficient change in a sweep is below
    ``tol``; if ``max_iter`` sweeps pass first, the last iterate is returned
    with ``converged_ = False`` and a ``ConvergenceWarning``.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    X, y = _as_xy(X, y)
    n, p = X.shape
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    if np.any(np.abs(mean) > STANDARDIZED_ATOL) or np.any(np.abs(std - 1.0) > STANDARDIZED_ATOL):
        raise NotStandardizedError("lasso_fit expects zero-mean unit-variance feature columns")

    Xc = X - mean
    col_sq = np.einsum("ij,ij->j", Xc, Xc) / n
    beta = np.zeros(p)
    r = y - np.mean(y)
    model = LassoModel(lam, tol, max_iter)
    for it in range(1, max_iter + 1):
        max_change = 0.0
        for j in range(p):
            old = beta[j]
            rho = Xc[:, j] @ r / n + col_sq[j] * old
            new = soft_threshold(rho, lam) / col_sq[j]
            if new != old:
                r -= Xc[:, j] * (new - old)
                beta[j] = new
                max_change = max(max_change, abs(new - old))
        model.n_iter_ = it
        if max_change < tol:
            model.converged_ = True
            break
    if not model.converged_:
        warnings.warn(f"lasso did not converge in {max_iter} sweeps", ConvergenceWarning,
                      stacklevel=2)
    model.coef_ = beta
    model.intercept_ = float(np.mean(y - X @ beta))
    model.n_features_ = p
    return model


class LassoRegression(Model):
    """Lasso estimator that standardizes its own inputs.

    The penalty applies to coefficients of standardized features, so
    ``alpha`` means the same thing whatever the input scale. Constant columns
    get a zero coefficient.
    """

    name = "lasso"

    def __init__(self, alpha=0.01, tol=1e-6, max_iter=10_000):
        self.alpha = alpha
        self.tol = tol
        self.max_iter = max_iter
        self.core_ = None
        self.x_mean_ = None
        self.x_std_ = None

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = _as_xy(X, y)
        self.x_mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        live = std > 0
        self.x_std_ = np.where(live, std, 1.0)
        Z = (X[:, live] - self.x_mean_[live]) / std[live]
        core = lasso_fit(Z, y, self.alpha, self.tol, self.max_iter)
        coef = np.zeros(X.shape[1])
        coef[live] = core.coef_
        core.coef_ = coef
        core.n_features_ = X.shape[1]
        self.core_ = core
        self.n_features_ = X.shape[1]
        return self

    @property
    def intercept_(self):
        return self.core_.intercept_

    @property
    def coef_(self):
        return self.core_.coef_

    @property
    def converged_(self):
        return self.core_.converged_

    def predict(self, X):
        X = self._check_X(X)
        return linear_predict(self.core_, (X - self.x_mean_) / self.x_std_)

    def to_dict(self):
        return {"kind": "lasso", "alpha": self.alpha, "tol": self.tol,
                "max_iter": self.max_iter, "intercept": self.core_.intercept_,
                "coef": self.core_.coef_.tolist(), "converged": self.core_.converged_,
                "n_iter": self.core_.n_iter_, "x_mean": self.x_mean_.tolist(),
                "x_std": self.x_std_.tolist()}

    @classmethod
    def from_dict(cls, d):
        m = cls(d["alpha"], d["tol"], d["max_iter"])
        core = LassoModel(d["alpha"], d["tol"], d["max_iter"])
        core.intercept_ = float(d["intercept"])
        core.coef_ = np.asarray(d["coef"], dtype=np.float64)
        core.converged_ = bool(d["converged"])
        core.n_iter_ = int(d["n_iter"])
        core.n_features_ = core.coef_.shape[0]
        m.core_ = core
        m.x_mean_ = np.asarray(d["x_mean"], dtype=np.float64)
        m.x_std_ = np.asarray(d["x_std"], dtype=np.float64)
        m.n_features_ = core.n_features_
        return m
