"""Layers with explicit forward and backward passes.

Each layer caches what its backward pass needs during ``forward`` and
overwrites ``grads`` (same keys and shapes as ``params``) in ``backward``.
Dense layers act on the last axis, so inputs may be (batch, features) or
(batch, seq, features).
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import HeadDivisibilityError, OddDModelError, ShapeMismatchError


def relu(z):
    return np.maximum(z, 0.0)


def relu_backward(z, dout):
    """Gradient passes where ``z > 0``; zero at and below the kink."""
    return dout * (z > 0)


def glorot_uniform(rng, fan_in, fan_out):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Layer:
    def __init__(self):
        self.params = {}
        self.grads = {}

    def _zero_grads(self):
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}


class Dense(Layer):
    def __init__(self, n_in, n_out, activation="identity", rng=None):
        super().__init__()
        if activation not in ("identity", "relu"):
            raise ValueError(f"unknown activation {activation!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_in, self.n_out, self.activation = n_in, n_out, activation
        self.params = {"W": glorot_uniform(rng, n_in, n_out), "b": np.zeros(n_out)}
        self._zero_grads()
        self.z = None

    def forward(self, x, training=False):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_in:
            raise ShapeMismatchError(f"Dense expects last dim {self.n_in}, got {x.shape}")
        self._lead = x.shape[:-1]
        self._x = x.reshape(-1, self.n_in)
        z = self._x @ self.params["W"] + self.params["b"]
        self.z = z
        out = relu(z) if self.activation == "relu" else z
        return out.reshape(*self._lead, self.n_out)

    def backward(self, dout):
        d = dout.reshape(-1, self.n_out)
        if self.activation == "relu":
            d = relu_backward(self.z, d)
        self.grads["W"] = self._x.T @ d
        self.grads["b"] = d.sum(axis=0)
        return (d @ self.params["W"].T).reshape(*self._lead, self.n_in)


class Dropout(Layer):
    """Inverted dropout; identity outside training or when ``rate == 0``."""

    def __init__(self, rate, rng=None):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.mask = None

    def forward(self, x, training=False):
        if not training or self.rate == 0.0:
            self.mask = None
            return x
        self.mask = (self.rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * self.mask

    def backward(self, dout):
        return dout if self.mask is None else dout * self.mask


class LayerNorm(Layer):
    def __init__(self, dim, eps=1e-5):
        super().__init__()
        self.eps = eps
        self.params = {"gain": np.ones(dim), "bias": np.zeros(dim)}
        self._zero_grads()

    def forward(self, x, training=False):
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        self._inv_std = 1.0 / np.sqrt(var + self.eps)
        self._xhat = (x - mu) * self._inv_std
        return self.params["gain"] * self._xhat + self.params["bias"]

    def backward(self, dout):
        xhat, inv_std = self._xhat, self._inv_std
        lead = tuple(range(dout.ndim - 1))
        self.grads["gain"] = (dout * xhat).sum(axis=lead)
        self.grads["bias"] = dout.sum(axis=lead)
        dxhat = dout * self.params["gain"]
        d = dout.shape[-1]
        return inv_std / d * (d * dxhat - dxhat.sum(axis=-1, keepdims=True)
                              - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))


def layer_norm(x, gain, bias, eps=1e-5):
    ln = LayerNorm(x.shape[-1], eps)
    ln.params["gain"] = np.asarray(gain, dtype=np.float64)
    ln.params["bias"] = np.asarray(bias, dtype=np.float64)
    return ln.forward(x)


def sinusoidal_table(seq_len, d_model):
    """Rows are positions: even columns sin(pos / 10000^(2i/d)), odd columns cos."""
    if d_model % 2:
        raise OddDModelError(f"sinusoidal encoding needs an even d_model, got {d_model}")
    pos = np.arange(seq_len, dtype=np.float64)[:, None]
    i = np.arange(d_model // 2, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * i / d_model)
    table = np.empty((seq_len, d_model))
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle)
    return table


positional_encoding = sinusoidal_table


class PositionalEncoding(Layer):
    """Adds a per-position vector to a (batch, seq, d_model) input.

    ``kind="sinusoidal"`` uses the fixed table; ``kind="learned"`` trains a
    position embedding initialised uniformly in [-0.05, 0.05].
    """

    def __init__(self, d_model, max_len=1, kind="sinusoidal", rng=None):
        super().__init__()
        self.kind = kind
        if kind == "sinusoidal":
            self.table = sinusoidal_table(max_len, d_model)
        elif kind == "learned":
            rng = rng if rng is not None else np.random.default_rng(0)
            self.params = {"table": rng.uniform(-0.05, 0.05, size=(max_len, d_model))}
            self._zero_grads()
        else:
            raise ValueError(f"unknown positional encoding {kind!r}")

    def _table(self):
        return self.params["table"] if self.kind == "learned" else self.table

    def forward(self, x, training=False):
        table = self._table()
        seq = x.shape[1]
        if seq > table.shape[0] or x.shape[-1] != table.shape[1]:
            raise ShapeMismatchError(f"encoding table {table.shape} cannot cover input {x.shape}")
        self._seq = seq
        return x + table[:seq]

    def backward(self, dout):
        if self.kind == "learned":
            g = np.zeros_like(self.params["table"])
            g[:self._seq] = dout.sum(axis=0)
            self.grads["table"] = g
        return dout


def softmax(s, axis=-1):
    e = np.exp(s - s.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


class MultiHeadAttention(Layer):
    """Scaled dot-product attention over ``n_heads`` heads with learned
    query/key/value/output projections (all with bias)."""

    def __init__(self, d_model, n_heads, rng=None):
        super().__init__()
        if n_heads < 1 or d_model % n_heads:
            raise HeadDivisibilityError(f"d_model {d_model} is not divisible by {n_heads} heads")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.d_model, self.n_heads = d_model, n_heads
        self.d_head = d_model // n_heads
        for name in ("q", "k", "v", "o"):
            self.params["W" + name] = glorot_uniform(rng, d_model, d_model)
            self.params["b" + name] = np.zeros(d_model)
        self._zero_grads()
        self.attention_weights = None

    def _split(self, x):
        b, t, _ = x.shape
        return x.reshape(b, t, self.n_heads, self.d_head).transpose(0, 2, 1, 3)

    def _merge(self, x):
        b, h, t, d = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, t, h * d)

    def attend(self, q, k=None, v=None):
        """Return ``(output, weights)``; weights have shape (batch, heads, seq_q, seq_k)."""
        k = q if k is None else k
        v = k if v is None else v
        if q.ndim != 3 or k.ndim != 3 or v.ndim != 3:
            raise ShapeMismatchError("attention inputs must be (batch, seq, d_model)")
        if (q.shape[-1] != self.d_model or k.shape[-1] != self.d_model
                or v.shape[-1] != self.d_model or k.shape[:2] != v.shape[:2]
                or q.shape[0] != k.shape[0]):
            raise ShapeMismatchError(f"incompatible shapes {q.shape}, {k.shape}, {v.shape}")
        P = self.params
        self._inputs = (q, k, v)
        Q = self._split(q @ P["Wq"] + P["bq"])
        K = self._split(k @ P["Wk"] + P["bk"])
        V = self._split(v @ P["Wv"] + P["bv"])
        scale = 1.0 / math.sqrt(self.d_head)
        A = softmax(Q @ K.transpose(0, 1, 3, 2) * scale)
        ctx = self._merge(A @ V)
        self._cache = (Q, K, V, A, ctx, scale)
        self.attention_weights = A
        return ctx @ P["Wo"] + P["bo"], A

    def forward(self, q, k=None, v=None, training=False):
        return self.attend(q, k, v)[0]

    def backward(self, dout):
        """Return gradients with respect to the query, key and value inputs."""
        P = self.params
        q, k, v = self._inputs
        Q, K, V, A, ctx, scale = self._cache
        D = self.d_model
        self.grads["Wo"] = ctx.reshape(-1, D).T @ dout.reshape(-1, D)
        self.grads["bo"] = dout.reshape(-1, D).sum(axis=0)
        dctx = self._split(dout @ P["Wo"].T)
        dA = dctx @ V.transpose(0, 1, 3, 2)
        dV = A.transpose(0, 1, 3, 2) @ dctx
        dS = A * (dA - (dA * A).sum(axis=-1, keepdims=True)) * scale
        dQ = dS @ K
        dK = dS.transpose(0, 1, 3, 2) @ Q
        outs = []
        for name, x, dproj in (("q", q, dQ), ("k", k, dK), ("v", v, dV)):
            g = self._merge(dproj).reshape(-1, D)
            self.grads["W" + name] = x.reshape(-1, D).T @ g
            self.grads["b" + name] = g.sum(axis=0)
            outs.append((g @ P["W" + name].T).reshape(x.shape))
        return tuple(outs)


class Network:
    """Container protocol used by the trainer and optimiser."""

    def sublayers(self):
        raise NotImplementedError

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def parameters(self):
        return [layer.params[k] for layer in self.sublayers() for k in layer.params]

    def gradients(self):
        return [layer.grads[k] for layer in self.sublayers() for k in layer.params]

    def named_parameters(self):
        return [(f"{i}.{type(layer).__name__}.{k}", layer.params[k])
                for i, layer in enumerate(self.sublayers()) for k in layer.params]

    def n_params(self):
        return sum(p.size for p in self.parameters())

    def get_weights(self):
        return [p.copy() for p in self.parameters()]

    def set_weights(self, weights):
        for p, w in zip(self.parameters(), weights, strict=True):
            p[...] = w

    def relu_preactivations(self):
        """Pre-activations of every ReLU from the last forward pass."""
        return [layer.z for layer in self.sublayers()
                if isinstance(layer, Dense) and layer.activation == "relu"]
