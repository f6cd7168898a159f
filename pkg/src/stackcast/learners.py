"""Regression trees and L2 gradient boosting with split-gain importances.

Trees use exact greedy splits over sorted unique values (no histogram
binning); datasets here are small enough that presorting once per fit and
scanning every candidate threshold is affordable. Boosting is plain L2:
each round fits a tree to the current residuals. Losses without a usable
second derivative are handled outside the booster, by the weight
optimization in :mod:`stackcast.hierarchy`.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from math import ceil

import numpy as np

from .core import ConfigError, DataError, EmptyInput


class FeatureIndexOutOfRange(DataError):
    """A tree references a feature column the input matrix does not have."""


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 4
    min_samples_leaf: int = 5
    max_leaves: int = 31

    def __post_init__(self):
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if self.max_leaves < 2:
            raise ConfigError("max_leaves must be >= 2")


@dataclass(frozen=True)
class BoostConfig:
    n_rounds: int = 100
    learning_rate: float = 0.1
    tree: TreeConfig = TreeConfig()
    subsample_features: float = 1.0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ConfigError("n_rounds must be >= 1")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ConfigError("learning_rate must be in (0, 1]")
        if not (0.0 < self.subsample_features <= 1.0):
            raise ConfigError("subsample_features must be in (0, 1]")


@dataclass(frozen=True)
class RegressionTree:
    """Flat-array binary regression tree.

    ``feature[i] == -1`` marks a leaf. Internal nodes route a row left
    when ``row[feature] <= threshold``. ``value`` holds the mean target
    of the training rows that reached the node; ``gain`` the SSE
    reduction achieved by its split (0 at leaves).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def max_feature_index(self) -> int:
        internal = self.feature >= 0
        return int(self.feature[internal].max()) if internal.any() else -1


def _best_split(X, y, presort, cols, mask, k, min_leaf, sse_parent):
    """Best (feature, threshold, gain) over the node's rows, or None.

    ``presort`` holds per-column argsort of the full fit matrix; the
    node's rows are extracted in sorted order per feature with one
    boolean gather, so the scan is O(N * M) per node.
    """
    if k < 2 * min_leaf:
        return None
    sub = presort[:, cols]                      # (n, c) row ids sorted per feature
    sel = mask[sub]                             # (n, c) membership flags
    rows = sub.T[sel.T].reshape(len(cols), k)   # (c, k) node rows, sorted per feature
    yv = y[rows]
    xv = X[rows, np.asarray(cols)[:, None]]

    cy = np.cumsum(yv, axis=1)[:, :-1]
    cy2 = np.cumsum(yv * yv, axis=1)[:, :-1]
    left_n = np.arange(1, k, dtype=np.float64)
    tot_y = yv.sum(axis=1, keepdims=True)
    tot_y2 = (yv * yv).sum(axis=1, keepdims=True)
    sse_left = cy2 - cy * cy / left_n
    sse_right = (tot_y2 - cy2) - (tot_y - cy) ** 2 / (k - left_n)
    gain = sse_parent - sse_left - sse_right

    valid = (xv[:, 1:] > xv[:, :-1])
    valid &= (left_n >= min_leaf) & (left_n <= k - min_leaf)
    gain[~valid] = -np.inf

    flat = int(np.argmax(gain))
    c, pos = divmod(flat, k - 1)
    best_gain = gain[c, pos]
    # guard against split "gains" that are pure summation roundoff
    if not np.isfinite(best_gain) or best_gain <= 1e-12 * max(1.0, sse_parent):
        return None
    lo, hi = xv[c, pos], xv[c, pos + 1]
    thr = 0.5 * (lo + hi)
    if thr >= hi:  # midpoint rounded up onto hi: fall back to lo, partition preserved
        thr = lo
    return cols[c], float(thr), float(best_gain)


def fit_tree(X, y, config: TreeConfig, *, columns=None, presort=None) -> RegressionTree:
    """Greedy CART regression tree minimizing squared error.

    Growth is best-first by split gain (deterministic: ties expand the
    earliest-created node), bounded by max_depth, min_samples_leaf and
    max_leaves. Split gain is parent SSE minus summed child SSE; leaf
    value is the mean of its rows.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"X must be 2-dimensional, got shape {X.shape}")
    n = X.shape[0]
    if n == 0:
        raise EmptyInput("cannot fit a tree on zero rows")
    if len(y) != n:
        raise DataError("X rows must match y length")
    if columns is None:
        columns = tuple(range(X.shape[1]))
    if presort is None:
        presort = np.argsort(X, axis=0, kind="stable")

    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    value = [float(np.mean(y))]
    gain = [0.0]
    depth = [0]
    masks = {0: np.ones(n, dtype=bool)}
    sizes = {0: n}

    def node_sse(mask, k):
        yv = y[mask]
        s = yv.sum()
        return float((yv * yv).sum() - s * s / k)

    candidates: list[tuple[float, int, int]] = []  # (-gain, tiebreak, node_id)
    splits: dict[int, tuple[int, float, float]] = {}
    counter = 0

    def consider(node_id):
        nonlocal counter
        if depth[node_id] >= config.max_depth:
            return
        k = sizes[node_id]
        found = _best_split(
            X, y, presort, columns, masks[node_id], k,
            config.min_samples_leaf, node_sse(masks[node_id], k),
        )
        if found is not None:
            splits[node_id] = found
            heapq.heappush(candidates, (-found[2], counter, node_id))
            counter += 1

    if len(columns) > 0:
        consider(0)
    n_leaves = 1
    while candidates and n_leaves < config.max_leaves:
        _, _, node_id = heapq.heappop(candidates)
        f, thr, g = splits.pop(node_id)
        mask = masks.pop(node_id)
        left_mask = mask & (X[:, f] <= thr)
        right_mask = mask & ~left_mask

        for child_mask in (left_mask, right_mask):
            child_id = len(feature)
            k = int(child_mask.sum())
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(np.mean(y[child_mask])))
            gain.append(0.0)
            depth.append(depth[node_id] + 1)
            masks[child_id] = child_mask
            sizes[child_id] = k
            if child_mask is left_mask:
                left[node_id] = child_id
            else:
                right[node_id] = child_id

        feature[node_id] = f
        threshold[node_id] = thr
        gain[node_id] = g
        n_leaves += 1
        consider(left[node_id])
        consider(right[node_id])

    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
        gain=np.asarray(gain, dtype=np.float64),
    )


def predict_tree(tree: RegressionTree, X) -> np.ndarray:
    """Route each row to a leaf (left when value <= threshold) and return leaf values."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"X must be 2-dimensional, got shape {X.shape}")
    if tree.max_feature_index() >= X.shape[1]:
        raise FeatureIndexOutOfRange(
            f"tree uses feature {tree.max_feature_index()}, matrix has {X.shape[1]} columns"
        )
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    while True:
        f = tree.feature[node]
        internal = f >= 0
        if not internal.any():
            break
        fx = X[rows, np.maximum(f, 0)]
        go_left = fx <= tree.threshold[node]
        nxt = np.where(go_left, tree.left[node], tree.right[node])
        node = np.where(internal, nxt, node)
    return tree.value[node]


@dataclass(frozen=True)
class BoostedModel:
    """Additive ensemble: base_score + learning_rate * sum of tree outputs."""

    base_score: float
    learning_rate: float
    trees: tuple[RegressionTree, ...]
    importances: np.ndarray
    train_mse: tuple[float, ...]

    @property
    def n_features(self) -> int:
        return len(self.importances)


def fit_boosted(X, y, config: BoostConfig, seed: int) -> BoostedModel:
    """L2 gradient boosting: each round fits a tree to the residuals.

    Training MSE is checked to be non-increasing after every round.
    Feature subsampling (when subsample_features < 1) draws columns from
    a generator seeded with ``seed``, so repeated fits are bit-identical.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"X must be 2-dimensional, got shape {X.shape}")
    n, m = X.shape
    if n == 0:
        raise EmptyInput("cannot fit on zero rows")
    if len(y) != n:
        raise DataError("X rows must match y length")

    rng = np.random.default_rng(seed)
    presort = np.argsort(X, axis=0, kind="stable")
    base = float(np.mean(y))
    pred = np.full(n, base)
    trees: list[RegressionTree] = []
    importances = np.zeros(m)
    history: list[float] = []
    prev = float(np.mean((y - pred) ** 2))

    n_cols = max(1, ceil(config.subsample_features * m)) if m else 0
    for _ in range(config.n_rounds):
        if m == 0:
            break
        if n_cols < m:
            cols = tuple(sorted(rng.choice(m, size=n_cols, replace=False).tolist()))
        else:
            cols = tuple(range(m))
        residual = y - pred
        tree = fit_tree(X, residual, config.tree, columns=cols, presort=presort)
        pred = pred + config.learning_rate * predict_tree(tree, X)
        mse = float(np.mean((y - pred) ** 2))
        if mse > prev + 1e-12 * max(1.0, prev):
            raise AssertionError(
                f"boosting round increased training MSE: {prev} -> {mse}"
            )
        prev = mse
        history.append(mse)
        internal = tree.feature >= 0
        np.add.at(importances, tree.feature[internal], tree.gain[internal])
        trees.append(tree)

    importances.setflags(write=False)
    return BoostedModel(
        base_score=base,
        learning_rate=config.learning_rate,
        trees=tuple(trees),
        importances=importances,
        train_mse=tuple(history),
    )


def predict_boosted(model: BoostedModel, X) -> np.ndarray:
    """base_score plus learning-rate-scaled sum of tree predictions."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"X must be 2-dimensional, got shape {X.shape}")
    out = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        out = out + model.learning_rate * predict_tree(tree, X)
    return out


def feature_importance(model: BoostedModel) -> list[tuple[int, float]]:
    """(feature_index, total split gain) pairs, descending by gain.

    Ties break toward the lower feature index.
    """
    gains = model.importances
    order = sorted(range(len(gains)), key=lambda i: (-gains[i], i))
    return [(i, float(gains[i])) for i in order]
