import numpy as np

from .layers import Dense, Network

HIDDEN_SIZES = (32, 8, 2)


class MLP(Network):
    """input -> Dense(32, relu) -> Dense(8, relu) -> Dense(2, relu) -> Dense(1)."""

    def __init__(self, input_dim, seed=0, hidden=HIDDEN_SIZES):
        if input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        rng = np.random.default_rng(seed)
        sizes = (input_dim, *hidden)
        self.layers = [Dense(a, b, "relu", rng) for a, b in zip(sizes[:-1], sizes[1:])]
        self.layers.append(Dense(sizes[-1], 1, "identity", rng))
        self.input_dim = input_dim

    def sublayers(self):
        return self.layers

    def forward(self, x, training=False):
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout


def build_mlp(input_dim, seed=0):
    return MLP(input_dim, seed)
