"""Tree-based regressors built on the selected tree kernel: a single CART
tree, a bootstrap-averaged random forest, and squared-error gradient
boosting.

Per-tree randomness (bootstrap rows, the feature-subsampling stream) comes
from the Philox counter-based generator keyed as [seed, tree_index], so
fits are reproducible and trees are independent of fit order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend


@dataclass
class TreeNodes:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return backend.predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value, X
        )


def _grow(X, y, max_depth, min_samples_split, max_features, seed) -> TreeNodes:
    arrays = backend.build_tree(
        X,
        y,
        max_depth=-1 if max_depth is None else int(max_depth),
        min_samples_split=int(min_samples_split),
        max_features=0 if max_features is None else int(max_features),
        seed=int(seed) & (2**64 - 1),
    )
    return TreeNodes(*arrays)


def _tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), index]))


def fit_decision_tree(
    X, y, max_depth=None, min_samples_split=2, max_features=None, seed=0
) -> TreeNodes:
    kernel_seed = 0
    if max_features is not None:
        kernel_seed = int(_tree_rng(seed, 0).integers(0, 2**64, dtype=np.uint64))
    return _grow(X, y, max_depth, min_samples_split, max_features, kernel_seed)


@dataclass
class Forest:
    trees: list[TreeNodes] = field(default_factory=list)

    def predict(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros(np.asarray(X).shape[0], dtype=np.float64)
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)


def fit_forest(
    X,
    y,
    n_trees=100,
    bootstrap=True,
    max_depth=None,
    min_samples_split=2,
    max_features=None,
    seed=0,
) -> Forest:
    """Random forest: average of CART trees on bootstrap samples.

    ``max_features=None`` considers every feature at every split (the
    regressor convention this project pins, documented in the README).
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = X.shape[0]
    trees = []
    for b in range(n_trees):
        rng = _tree_rng(seed, b)
        if bootstrap:
            rows = rng.integers(0, n, size=n)
            Xb, yb = X[rows], y[rows]
        else:
            Xb, yb = X, y
        kernel_seed = 0
        if max_features is not None:
            kernel_seed = int(rng.integers(0, 2**64, dtype=np.uint64))
        trees.append(_grow(Xb, yb, max_depth, min_samples_split, max_features, kernel_seed))
    return Forest(trees)


@dataclass
class Boosted:
    init: float
    learning_rate: float
    trees: list[TreeNodes] = field(default_factory=list)

    def predict(self, X: np.ndarray, n_stages: int | None = None) -> np.ndarray:
        if n_stages is None:
            n_stages = len(self.trees)
        out = np.full(np.asarray(X).shape[0], self.init, dtype=np.float64)
        for tree in self.trees[:n_stages]:
            out += self.learning_rate * tree.predict(X)
        return out


def fit_boosted(
    X,
    y,
    n_stages=100,
    learning_rate=0.1,
    max_depth=3,
    min_samples_split=2,
    seed=0,
) -> Boosted:
    """Gradient boosting with squared-error loss: start from the target
    mean, then add shrunken depth-limited trees fit to residuals."""
    if n_stages < 0:
        raise ValueError("n_stages must be >= 0")
    if learning_rate <= 0:
        raise ValueError("learning_rate must be > 0")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    init = float(np.mean(y))
    pred = np.full(len(y), init, dtype=np.float64)
    trees = []
    for _ in range(n_stages):
        residual = y - pred
        tree = _grow(X, residual, max_depth, min_samples_split, None, 0)
        pred += learning_rate * tree.predict(X)
        trees.append(tree)
    return Boosted(init, learning_rate, trees)
