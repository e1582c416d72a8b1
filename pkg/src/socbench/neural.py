"""fit/predict estimators around the MLP and transformer networks."""
from __future__ import annotations

import numpy as np

from .base import Model
from .errors import InvalidConfigError
from .nn.mlp import build_mlp
from .nn.optim import AdamState
from .nn.training import TrainConfig, train
from .transformer import TransformerConfig, build_transformer


class NeuralRegressor(Model):
    """Trains a network with Adam and validation early stopping.

    ``arch`` is ``"mlp"`` or one of the transformer variants. The target is
    standardized with the training mean and std before training and mapped
    back in ``predict``. Without an explicit validation set, the last
    ``val_fraction`` of a seeded shuffle of the training rows is held out.
    """

    def __init__(self, arch="mlp", train_config=None, learning_rate=0.001, seed=0,
                 transformer=None, val_fraction=0.1, scale_target=True):
        self.arch = arch
        self.train_config = train_config or TrainConfig(shuffle_seed=seed)
        self.learning_rate = learning_rate
        self.seed = seed
        self.transformer = dict(transformer or {})
        self.val_fraction = val_fraction
        self.scale_target = scale_target
        self.net_ = None
        self.history_ = None
        self.y_mean_, self.y_std_ = 0.0, 1.0

    @property
    def name(self):
        return self.arch

    def build(self, input_dim):
        if self.arch == "mlp":
            return build_mlp(input_dim, self.seed)
        if self.arch in ("attention", "positional", "full"):
            cfg = TransformerConfig(variant=self.arch, seed=self.seed, **self.transformer)
            return build_transformer(input_dim, cfg)
        raise InvalidConfigError(f"unknown architecture {self.arch!r}")

    def fit(self, X, y, X_val=None, y_val=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        if X_val is None:
            n_val = max(1, int(round(self.val_fraction * len(y))))
            order = np.random.default_rng([self.seed, 2]).permutation(len(y))
            X, X_val = X[order[:-n_val]], X[order[-n_val:]]
            y, y_val = y[order[:-n_val]], y[order[-n_val:]]
        X_val = np.asarray(X_val, dtype=np.float64)
        y_val = np.asarray(y_val, dtype=np.float64).ravel()
        if self.scale_target:
            self.y_mean_ = float(np.mean(y))
            std = float(np.std(y))
            self.y_std_ = std if std > 0 else 1.0
        self.net_ = self.build(X.shape[1])
        self.history_ = train(self.net_, X, self._scale(y), X_val, self._scale(y_val),
                              self.train_config, AdamState(lr=self.learning_rate))
        self.n_features_ = X.shape[1]
        return self

    def _scale(self, y):
        return ((y - self.y_mean_) / self.y_std_).reshape(-1, 1)

    def predict(self, X):
        X = self._check_X(X)
        return self.net_.forward(X).ravel() * self.y_std_ + self.y_mean_

    def to_dict(self):
        tc = self.train_config
        return {"kind": "neural", "arch": self.arch, "seed": self.seed,
                "learning_rate": self.learning_rate, "transformer": self.transformer,
                "train_config": {"epochs": tc.epochs, "batch_size": tc.batch_size,
                                 "patience": tc.patience, "shuffle_seed": tc.shuffle_seed,
                                 "min_delta": tc.min_delta},
                "y_mean": self.y_mean_, "y_std": self.y_std_, "n_features": self.n_features_,
                "weights": [w.tolist() for w in self.net_.get_weights()],
                "history": self.history_.to_dict() if self.history_ else None}

    @classmethod
    def from_dict(cls, d):
        m = cls(d["arch"], TrainConfig(**d["train_config"]), d["learning_rate"], d["seed"],
                d.get("transformer"))
        m.n_features_ = int(d["n_features"])
        m.y_mean_, m.y_std_ = float(d["y_mean"]), float(d["y_std"])
        m.net_ = m.build(m.n_features_)
        m.net_.set_weights([np.asarray(w, dtype=np.float64) for w in d["weights"]])
        return m
