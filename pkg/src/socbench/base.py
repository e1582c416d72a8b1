"""Shared estimator contract."""
import numpy as np

from .errors import DimensionMismatchError, NotFittedError


class Model:
    """fit(X, y) then predict(X). Predicting before fitting raises ``NotFittedError``."""

    name = "model"
    n_features_ = None

    @property
    def fitted(self) -> bool:
        return self.n_features_ is not None

    def fit(self, X, y, X_val=None, y_val=None):
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        raise NotImplementedError

    def _check_X(self, X) -> np.ndarray:
        if not self.fitted:
            raise NotFittedError(f"{type(self).__name__} must be fitted before predict")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise DimensionMismatchError(
                f"expected {self.n_features_} features, got array of shape {X.shape}")
        return X

    def to_dict(self) -> dict:
        raise NotImplementedError
