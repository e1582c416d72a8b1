"""Mini-batch training with validation-loss early stopping."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyInputError, InvalidConfigError, ShapeMismatchError
from .optim import AdamState, adam_step


def mse_loss(pred, target):
    """Return ``(mean squared error, d loss / d pred)``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"prediction {pred.shape} vs target {target.shape}")
    diff = pred - target
    n = diff.size
    return float(np.sum(diff * diff)) / n, 2.0 * diff / n


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 1000
    patience: int = 5
    shuffle_seed: int = 0
    min_delta: float = 0.0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise InvalidConfigError("epochs, batch_size and patience must all be >= 1")


@dataclass
class TrainingHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False
    restored_best: bool = False

    @property
    def epochs_run(self):
        return len(self.train_loss)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_loss", "val_loss"])
            for i, (tr, va) in enumerate(zip(self.train_loss, self.val_loss), start=1):
                w.writerow([i, repr(tr), repr(va)])

    def to_dict(self):
        return {"train_loss": list(self.train_loss), "val_loss": list(self.val_loss),
                "best_epoch": self.best_epoch, "stopped_early": self.stopped_early,
                "restored_best": self.restored_best}


def _as_2d(y):
    y = np.asarray(y, dtype=np.float64)
    return y.reshape(-1, 1) if y.ndim == 1 else y


def train(model, X_train, y_train, X_val, y_val, config: TrainConfig = TrainConfig(),
          optimizer: AdamState | None = None) -> TrainingHistory:
    """Fit ``model`` (a ``Network``) by minimising MSE with Adam.

    Rows are reshuffled every epoch with a generator seeded from
    ``config.shuffle_seed``; the last batch of an epoch may be smaller.
    Training stops once validation loss fails to improve by more than
    ``min_delta`` for ``patience`` consecutive epochs, and the weights from
    the best validation epoch are restored.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    X_val = np.asarray(X_val, dtype=np.float64)
    y_train, y_val = _as_2d(y_train), _as_2d(y_val)
    n = X_train.shape[0]
    if n == 0 or X_val.shape[0] == 0:
        raise EmptyInputError("training and validation sets must be non-empty")
    optimizer = optimizer if optimizer is not None else AdamState()
    rng = np.random.default_rng(config.shuffle_seed)
    params = model.parameters()

    history = TrainingHistory()
    best, best_weights, wait = np.inf, model.get_weights(), 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            pred = model.forward(X_train[idx], training=True)
            loss, grad = mse_loss(pred, y_train[idx])
            model.backward(grad)
            adam_step(optimizer, params, model.gradients())
            total += loss * len(idx)
        val_loss = mse_loss(model.forward(X_val), y_val)[0]
        train_loss = total / n
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise FloatingPointError(f"non-finite loss at epoch {epoch}")
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)

        if val_loss < best - config.min_delta:
            best, best_weights, wait = val_loss, model.get_weights(), 0
            history.best_epoch = epoch
        else:
            wait += 1
            if wait >= config.patience:
                history.stopped_early = True
                break

    model.set_weights(best_weights)
    history.restored_best = True
    return history
