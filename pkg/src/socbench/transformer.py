"""Transformer regressors and their two ablations.

Tabular rows are reshaped to sequences of length one, so attention over a
single position always has weight 1 and a sinusoidal encoding reduces to the
constant row ``[0, 1, 0, 1, ...]``. Both are implemented in full anyway; the
sequence axis is kept general.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .errors import HeadDivisibilityError, InvalidConfigError, OddDModelError
from .nn.layers import Dense, Dropout, LayerNorm, MultiHeadAttention, Network, PositionalEncoding

VARIANTS = ("attention", "positional", "full")


@dataclass(frozen=True)
class TransformerConfig:
    variant: str = "full"
    d_model: int = 32
    n_heads: int = 4
    dropout_rate: float = 0.1
    hidden_units: int = 64
    seed: int = 0
    positional: str = "sinusoidal"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.d_model < 1 or self.hidden_units < 2:
            raise InvalidConfigError("d_model must be >= 1 and hidden_units >= 2")
        if self.variant != "positional" and (self.n_heads < 1 or self.d_model % self.n_heads):
            raise HeadDivisibilityError(
                f"d_model {self.d_model} is not divisible by n_heads {self.n_heads}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidConfigError("dropout_rate must be in [0, 1)")
        if self.positional not in ("sinusoidal", "learned"):
            raise InvalidConfigError(f"unknown positional encoding {self.positional!r}")
        if (self.variant != "attention" and self.positional == "sinusoidal"
                and self.d_model % 2):
            raise OddDModelError(f"sinusoidal encoding needs an even d_model, got {self.d_model}")

    def to_dict(self):
        return asdict(self)


def reshape_input(X):
    """(batch, features) -> (batch, 1, features)."""
    X = np.asarray(X, dtype=np.float64)
    return X.reshape(X.shape[0], 1, X.shape[-1])


def flatten_input(T):
    return T.reshape(T.shape[0], -1)


class TransformerNet(Network):
    """One encoder block wired per ``config.variant``.

    attention:  proj -> MHA -> dropout -> LayerNorm(h + .) -> Dense(H, relu)
                -> Dense(H/2, relu) -> Dense(1)
    positional: proj -> +PE -> dropout -> LayerNorm -> Dense(H, relu)
                -> Dense(H, relu) -> Dense(1)
    full:       proj -> +PE -> dropout -> MHA -> LayerNorm(. + skip)
                -> Dense(H, relu) -> Dense(1)
    """

    def __init__(self, input_dim, config: TransformerConfig = TransformerConfig(), max_len=1):
        self.config = config
        self.input_dim = input_dim
        rng = np.random.default_rng(config.seed)
        D, H = config.d_model, config.hidden_units
        self.proj = Dense(input_dim, D, "identity", rng)
        self.pe = None
        self.mha = None
        if config.variant != "attention":
            self.pe = PositionalEncoding(D, max_len, config.positional, rng)
        if config.variant != "positional":
            self.mha = MultiHeadAttention(D, config.n_heads, rng)
        self.dropout = Dropout(config.dropout_rate, np.random.default_rng([config.seed, 1]))
        self.norm = LayerNorm(D)
        if config.variant == "attention":
            sizes = (D, H, H // 2)
        elif config.variant == "positional":
            sizes = (D, H, H)
        else:
            sizes = (D, H)
        self.head = [Dense(a, b, "relu", rng) for a, b in zip(sizes[:-1], sizes[1:])]
        self.head.append(Dense(sizes[-1], 1, "identity", rng))

    def sublayers(self):
        layers = [self.proj]
        if self.pe is not None and self.pe.params:
            layers.append(self.pe)
        if self.mha is not None:
            layers.append(self.mha)
        return layers + [self.norm] + self.head

    def forward(self, x, training=False):
        x = np.asarray(x, dtype=np.float64)
        seq = reshape_input(x) if x.ndim == 2 else x
        h = self.proj.forward(seq)
        v = self.config.variant
        if v == "attention":
            a = self.dropout.forward(self.mha.forward(h), training)
            z = self.norm.forward(h + a)
        else:
            if self.pe is not None:
                h = self.pe.forward(h)
            h = self.dropout.forward(h, training)
            if v == "positional":
                z = self.norm.forward(h)
            else:
                z = self.norm.forward(h + self.mha.forward(h))
        for layer in self.head:
            z = layer.forward(z, training)
        self._seq_len = z.shape[1]
        return z.mean(axis=1)

    def backward(self, dout):
        d = np.repeat(dout[:, None, :] / self._seq_len, self._seq_len, axis=1)
        for layer in reversed(self.head):
            d = layer.backward(d)
        dz = self.norm.backward(d)
        v = self.config.variant
        if v == "attention":
            da = self.dropout.backward(dz)
            dh = dz + sum(self.mha.backward(da))
        else:
            if v == "positional":
                dh = dz
            else:
                dh = dz + sum(self.mha.backward(dz))
            dh = self.dropout.backward(dh)
            if self.pe is not None:
                dh = self.pe.backward(dh)
        return self.proj.backward(dh)

    def attention_weights(self, X):
        """Softmax weights of an evaluation-mode forward pass, (batch, heads, seq, seq)."""
        if self.mha is None:
            raise InvalidConfigError("the positional-only variant has no attention layer")
        self.forward(X)
        return self.mha.attention_weights


def build_transformer(input_dim, config: TransformerConfig = TransformerConfig()):
    if input_dim < 1:
        raise InvalidConfigError("input_dim must be >= 1")
    return TransformerNet(input_dim, config)


def export_attention_csv(weights, path):
    """One row per (batch, head, query, key) weight."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["batch", "head", "query", "key", "weight"])
        for idx in np.ndindex(weights.shape):
            w.writerow([*idx, repr(float(weights[idx]))])
