"""CART regression tree (variance-reduction splits, mean-valued leaves)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import Model
from .errors import DimensionMismatchError, EmptyInputError, InvalidConfigError

# relative slack under which two split gains are considered tied
TIE_RTOL = 1e-12


@dataclass
class Leaf:
    value: float
    n_samples: int


@dataclass
class Split:
    feature_index: int
    threshold: float
    left: object = None
    right: object = None


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidConfigError("max_depth must be >= 0 or None")
        if self.min_samples_split < 2:
            raise InvalidConfigError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise InvalidConfigError("min_samples_leaf must be >= 1")


def best_split(X, y, min_samples_leaf=1):
    """Return ``(feature, threshold, sse_reduction)`` or None if no valid split.

    Candidates are midpoints between consecutive distinct sorted values.
    Equal gains are resolved toward the lowest feature index, then the
    lowest threshold.
    """
    n, p = X.shape
    if n < 2 * min_samples_leaf:
        return None
    yc = y - y.mean()
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    ys = yc[order]
    running = np.cumsum(ys, axis=0)
    left_sum = running[:-1]
    total = running[-1]
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    gain = left_sum ** 2 / n_left + (total - left_sum) ** 2 / n_right

    valid = xs[1:] > xs[:-1]
    if min_samples_leaf > 1:
        sizes_ok = (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
        valid &= sizes_ok
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    top = gain.max()
    cutoff = top - TIE_RTOL * max(abs(top), 1.0)
    for f in range(p):
        hits = np.flatnonzero(gain[:, f] >= cutoff)
        if hits.size:
            i = hits[0]
            break
    lo, hi = xs[i, f], xs[i + 1, f]
    threshold = (lo + hi) / 2.0
    if not lo <= threshold < hi:
        threshold = lo
    parent = float(total[f]) ** 2 / n
    return f, float(threshold), float(gain[i, f] - parent)


def _leaf(yy):
    # exactly rounded sum, so the value does not depend on row order
    return Leaf(math.fsum(yy.tolist()) / len(yy), len(yy))


def tree_fit(X, y, config: TreeConfig = TreeConfig()):
    """Greedy recursive partitioning, built with an explicit stack."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[0] != y.shape[0]:
        raise EmptyInputError(f"need a non-empty 2-D X matching y, got {X.shape} and {y.shape}")

    def make(idx, depth):
        yy = y[idx]
        if (len(idx) < config.min_samples_split
                or (config.max_depth is not None and depth >= config.max_depth)
                or np.all(yy == yy[0])):
            return _leaf(yy), None
        found = best_split(X[idx], yy, config.min_samples_leaf)
        if found is None:
            return _leaf(yy), None
        f, thr, reduction = found
        resid = yy - yy.mean()
        if not reduction > TIE_RTOL * float(resid @ resid):
            return _leaf(yy), None
        go_left = X[idx, f] <= thr
        return Split(f, thr), (idx[go_left], idx[~go_left])

    root, children = make(np.arange(len(y)), 0)
    stack = [(root, children, 0)] if children else []
    while stack:
        node, (li, ri), depth = stack.pop()
        node.left, lc = make(li, depth + 1)
        node.right, rc = make(ri, depth + 1)
        if rc:
            stack.append((node.right, rc, depth + 1))
        if lc:
            stack.append((node.left, lc, depth + 1))
    return root


def tree_predict(tree, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatchError(f"X must be 2-D, got shape {X.shape}")
    need = max_feature_index(tree) + 1
    if X.shape[1] < need:
        raise DimensionMismatchError(f"tree splits on feature {need - 1}, X has {X.shape[1]}")
    out = np.empty(X.shape[0])
    stack = [(tree, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if isinstance(node, Leaf):
            out[idx] = node.value
            continue
        left = X[idx, node.feature_index] <= node.threshold
        stack.append((node.left, idx[left]))
        stack.append((node.right, idx[~left]))
    return out


def _walk(tree):
    """Preorder iteration yielding ``(node, depth)``."""
    stack = [(tree, 0)]
    while stack:
        node, depth = stack.pop()
        yield node, depth
        if isinstance(node, Split):
            stack.append((node.right, depth + 1))
            stack.append((node.left, depth + 1))


def max_feature_index(tree) -> int:
    return max((n.feature_index for n, _ in _walk(tree) if isinstance(n, Split)), default=-1)


def tree_depth(tree) -> int:
    return max(d for _, d in _walk(tree))


def n_leaves(tree) -> int:
    return sum(isinstance(n, Leaf) for n, _ in _walk(tree))


def tree_to_list(tree) -> list:
    """Flat preorder encoding: each split is followed by its left then right subtree."""
    out = []
    for node, _ in _walk(tree):
        if isinstance(node, Leaf):
            out.append({"leaf": node.value, "n_samples": node.n_samples})
        else:
            out.append({"feature": node.feature_index, "threshold": node.threshold})
    return out


def tree_from_list(items):
    it = iter(items)

    def node_of(d):
        if "leaf" in d:
            return Leaf(float(d["leaf"]), int(d["n_samples"]))
        return Split(int(d["feature"]), float(d["threshold"]))

    root = node_of(next(it))
    pending = [root] if isinstance(root, Split) else []
    # each pending split still needs its left child first, then its right
    while pending:
        parent = pending[-1]
        child = node_of(next(it))
        if parent.left is None:
            parent.left = child
        else:
            parent.right = child
            pending.pop()
        if isinstance(child, Split):
            pending.append(child)
    return root


def render_tree(tree, feature_names=None, precision=4) -> str:
    def fname(i):
        return feature_names[i] if feature_names else f"x[{i}]"

    lines = []
    for node, depth in _walk(tree):
        pad = "|   " * depth
        if isinstance(node, Leaf):
            lines.append(f"{pad}value = {node.value:.{precision}f} (n={node.n_samples})")
        else:
            lines.append(f"{pad}{fname(node.feature_index)} <= {node.threshold:.{precision}g}")
    return "\n".join(lines)


class DecisionTreeRegressor(Model):
    name = "tree"

    def __init__(self, max_depth=None, min_samples_split=2, min_samples_leaf=1):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.tree_ = None

    @property
    def config(self):
        return TreeConfig(self.max_depth, self.min_samples_split, self.min_samples_leaf)

    def fit(self, X, y, X_val=None, y_val=None):
        X = np.asarray(X, dtype=np.float64)
        self.tree_ = tree_fit(X, y, self.config)
        self.n_features_ = X.shape[1]
        return self

    def predict(self, X):
        return tree_predict(self.tree_, self._check_X(X))

    def to_dict(self):
        return {"kind": "tree", "max_depth": self.max_depth,
                "min_samples_split": self.min_samples_split,
                "min_samples_leaf": self.min_samples_leaf,
                "n_features": self.n_features_, "nodes": tree_to_list(self.tree_)}

    @classmethod
    def from_dict(cls, d):
        m = cls(d["max_depth"], d["min_samples_split"], d["min_samples_leaf"])
        m.tree_ = tree_from_list(d["nodes"])
        m.n_features_ = int(d["n_features"])
        return m
