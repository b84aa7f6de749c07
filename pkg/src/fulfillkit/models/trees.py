"""Tree learners: second-order boosted classifier and a random forest.

Both use exact greedy splits over presorted feature columns. Missing values
(NaN) are legal inputs: the boosted trees route them to whichever side
maximizes the split gain, the forest routes them with the larger child.
Infinities are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DataError, NumericError


@dataclass
class _Node:
    """Internal split or leaf; ``left is None`` marks a leaf."""

    value: float = 0.0
    feature: int = -1
    threshold: float = 0.0
    missing_left: bool = True
    left: "_Node | None" = None
    right: "_Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass(frozen=True)
class GbtParams:
    n_trees: int = 200
    depth: int = 4
    eta: float = 0.1
    lambda_reg: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.n_trees < 0 or self.depth < 1:
            raise NumericError("n_trees must be >= 0 and depth >= 1")
        if self.eta <= 0 or self.lambda_reg < 0 or self.min_child_weight < 0:
            raise NumericError("eta must be positive; penalties nonnegative")


@dataclass(frozen=True)
class TreeEnsemble:
    trees: tuple[_Node, ...]
    learning_rate: float
    base_score: float
    n_features: int
    feature_names: tuple[str, ...] | None = None


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[_Node, ...]
    oob_masks: np.ndarray  # (n_trees, n_train) bool
    n_features: int
    feature_names: tuple[str, ...] | None = None


def _check_features(X, n_features: int | None = None) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise NumericError("feature matrix must be 2-dimensional")
    if np.isinf(arr).any():
        raise NumericError("infinite feature values")
    if n_features is not None and arr.shape[1] != n_features:
        raise DataError(f"expected {n_features} features, got {arr.shape[1]}")
    return arr


def _check_binary_labels(y, n_rows: int) -> np.ndarray:
    labels = np.asarray(y, dtype=float)
    if labels.shape != (n_rows,):
        raise NumericError("labels must be one per row")
    if not set(np.unique(labels)) <= {0.0, 1.0}:
        raise DataError("labels must be encoded 0/1")
    if len(np.unique(labels)) < 2:
        raise DataError("training labels contain a single class")
    return labels


def _tree_values(node: _Node, X: np.ndarray) -> np.ndarray:
    """Leaf value per row, iteratively to spare the recursion limit."""
    out = np.empty(X.shape[0], dtype=float)
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        current, rows = stack.pop()
        if current.is_leaf:
            out[rows] = current.value
            continue
        col = X[rows, current.feature]
        nan = np.isnan(col)
        goes_left = np.where(nan, current.missing_left, col < current.threshold)
        stack.append((current.left, rows[goes_left]))
        stack.append((current.right, rows[~goes_left]))
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _grow_gbt(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    presort: np.ndarray,
    nan_mask: np.ndarray,
    rows: np.ndarray,
    depth: int,
    params: GbtParams,
) -> _Node:
    g_node = float(g[rows].sum())
    h_node = float(h[rows].sum())
    leaf = _Node(value=-g_node / (h_node + params.lambda_reg))
    if depth >= params.depth or len(rows) < 2:
        return leaf

    member = np.zeros(X.shape[0], dtype=bool)
    member[rows] = True
    best_gain = 0.0
    best = None  # (feature, threshold, missing_left)
    parent_term = g_node * g_node / (h_node + params.lambda_reg)
    for j in range(X.shape[1]):
        order = presort[:, j]
        ordered = order[member[order]]
        valid = ordered[~nan_mask[ordered, j]]
        if len(valid) < 2:
            continue
        vals = X[valid, j]
        g_cum = np.cumsum(g[valid])
        h_cum = np.cumsum(h[valid])
        g_valid, h_valid = g_cum[-1], h_cum[-1]
        g_miss, h_miss = g_node - g_valid, h_node - h_valid
        gl0, hl0 = g_cum[:-1], h_cum[:-1]
        distinct = vals[:-1] < vals[1:]
        if not distinct.any():
            continue
        for missing_left in (True, False):
            gl = gl0 + g_miss if missing_left else gl0
            hl = hl0 + h_miss if missing_left else hl0
            gr = g_node - gl
            hr = h_node - hl
            ok = distinct & (hl >= params.min_child_weight) & (hr >= params.min_child_weight)
            if not ok.any():
                continue
            gains = 0.5 * (
                gl**2 / (hl + params.lambda_reg)
                + gr**2 / (hr + params.lambda_reg)
                - parent_term
            ) - params.gamma
            gains = np.where(ok, gains, -np.inf)
            pos = int(np.argmax(gains))
            if gains[pos] > best_gain:
                best_gain = float(gains[pos])
                best = (j, float((vals[pos] + vals[pos + 1]) / 2.0), missing_left)
    if best is None:
        return leaf

    feature, threshold, missing_left = best
    col = X[rows, feature]
    nan = np.isnan(col)
    goes_left = np.where(nan, missing_left, col < threshold)
    return _Node(
        feature=feature,
        threshold=threshold,
        missing_left=missing_left,
        left=_grow_gbt(X, g, h, presort, nan_mask, rows[goes_left], depth + 1, params),
        right=_grow_gbt(X, g, h, presort, nan_mask, rows[~goes_left], depth + 1, params),
    )


def gbt_fit(
    X,
    y,
    params: GbtParams | None = None,
    seed: int = 0,
    feature_names: Sequence[str] | None = None,
    return_history: bool = False,
):
    """Boost regression trees on the logistic loss.

    Per round, with p the current probability: g = p - y, h = p(1 - p);
    leaf weight -G/(H+lambda); split gain the second-order formula minus
    gamma, accepted only when positive.
    """
    del seed  # no subsampling: fits are deterministic regardless
    arr = _check_features(X)
    labels = _check_binary_labels(y, arr.shape[0])
    params = params or GbtParams()

    base_rate = float(labels.mean())
    base_score = math.log(base_rate / (1.0 - base_rate))
    presort = np.argsort(arr, axis=0, kind="stable")
    nan_mask = np.isnan(arr)
    all_rows = np.arange(arr.shape[0])

    margins = np.full(arr.shape[0], base_score)
    trees: list[_Node] = []
    history: list[float] = []
    for _ in range(params.n_trees):
        prob = _sigmoid(margins)
        g = prob - labels
        h = prob * (1.0 - prob)
        root = _grow_gbt(arr, g, h, presort, nan_mask, all_rows, 0, params)
        trees.append(root)
        margins = margins + params.eta * _tree_values(root, arr)
        if return_history:
            p_new = np.clip(_sigmoid(margins), 1e-15, 1.0 - 1e-15)
            loss = float(-(labels * np.log(p_new) + (1 - labels) * np.log(1 - p_new)).mean())
            history.append(loss)

    model = TreeEnsemble(
        trees=tuple(trees),
        learning_rate=params.eta,
        base_score=base_score,
        n_features=arr.shape[1],
        feature_names=tuple(feature_names) if feature_names is not None else None,
    )
    return (model, history) if return_history else model


def gbt_predict(model: TreeEnsemble, x) -> np.ndarray:
    """Probability of class 1 per row; threshold at 0.5 to classify."""
    arr = _check_features(x, model.n_features)
    margins = np.full(arr.shape[0], model.base_score)
    for tree in model.trees:
        margins += model.learning_rate * _tree_values(tree, arr)
    return _sigmoid(margins)


def _grow_gini(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    presort: np.ndarray,
    nan_mask: np.ndarray,
    rows: np.ndarray,
    depth: int,
    max_depth: int | None,
    mtry: int,
    min_samples_leaf: float,
    rng: np.random.Generator,
) -> _Node:
    """``rows`` holds distinct member row ids; bootstrap multiplicity lives
    in ``weights`` so presorted column order can be reused across trees."""
    w_node = float(weights[rows].sum())
    ones = float((weights[rows] * y[rows]).sum())
    leaf = _Node(value=ones / w_node)
    if ones == 0 or ones == w_node or w_node < 2 * min_samples_leaf:
        return leaf
    if max_depth is not None and depth >= max_depth:
        return leaf

    member = np.zeros(X.shape[0], dtype=bool)
    member[rows] = True
    p1 = ones / w_node
    parent_gini = 1.0 - p1**2 - (1.0 - p1) ** 2
    features = rng.choice(X.shape[1], size=mtry, replace=False)
    best_gain = 0.0
    best = None
    for j in features:
        order = presort[:, j]
        ordered = order[member[order]]
        valid = ordered[~nan_mask[ordered, j]]
        if len(valid) < 2:
            continue
        vals = X[valid, j]
        w_valid = weights[valid]
        size_cum = np.cumsum(w_valid)
        ones_cum = np.cumsum(w_valid * y[valid])
        w_miss = w_node - size_cum[-1]
        nl = size_cum[:-1]
        nr = size_cum[-1] - nl
        ones_l = ones_cum[:-1]
        ones_r = ones_cum[-1] - ones_l
        distinct = vals[:-1] < vals[1:]
        # missing rows follow the larger child and count toward leaf sizes
        miss_left = nl >= nr
        size_l = nl + np.where(miss_left, w_miss, 0.0)
        size_r = nr + np.where(miss_left, 0.0, w_miss)
        ok = distinct & (size_l >= min_samples_leaf) & (size_r >= min_samples_leaf)
        if not ok.any():
            continue
        gini_l = 1.0 - (ones_l / nl) ** 2 - ((nl - ones_l) / nl) ** 2
        gini_r = 1.0 - (ones_r / nr) ** 2 - ((nr - ones_r) / nr) ** 2
        gains = parent_gini - (nl * gini_l + nr * gini_r) / size_cum[-1]
        gains = np.where(ok, gains, -np.inf)
        pos = int(np.argmax(gains))
        if gains[pos] > best_gain:
            best_gain = float(gains[pos])
            best = (
                int(j),
                float((vals[pos] + vals[pos + 1]) / 2.0),
                bool(miss_left[pos]),
            )
    if best is None:
        return leaf

    feature, threshold, missing_left = best
    col = X[rows, feature]
    nan = np.isnan(col)
    goes_left = np.where(nan, missing_left, col < threshold)
    left_rows, right_rows = rows[goes_left], rows[~goes_left]
    if len(left_rows) == 0 or len(right_rows) == 0:
        return leaf
    return _Node(
        feature=feature,
        threshold=threshold,
        missing_left=missing_left,
        left=_grow_gini(
            X, y, weights, presort, nan_mask, left_rows, depth + 1, max_depth,
            mtry, min_samples_leaf, rng,
        ),
        right=_grow_gini(
            X, y, weights, presort, nan_mask, right_rows, depth + 1, max_depth,
            mtry, min_samples_leaf, rng,
        ),
    )


def rf_fit(
    X,
    y,
    n_trees: int = 300,
    mtry: int | None = None,
    seed: int = 0,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    feature_names: Sequence[str] | None = None,
) -> RandomForestModel:
    """Bootstrap forest of Gini CART trees, mtry features per split."""
    arr = _check_features(X)
    labels = _check_binary_labels(y, arr.shape[0])
    if n_trees < 1:
        raise NumericError("n_trees must be positive")
    n, p = arr.shape
    if mtry is None:
        mtry = max(1, math.ceil(math.sqrt(p)))
    mtry = min(mtry, p)

    rng = np.random.default_rng(seed)
    presort = np.argsort(arr, axis=0, kind="stable")
    nan_mask = np.isnan(arr)
    trees: list[_Node] = []
    oob = np.zeros((n_trees, n), dtype=bool)
    for t in range(n_trees):
        sample = rng.integers(0, n, size=n)
        weights = np.bincount(sample, minlength=n).astype(float)
        rows = np.flatnonzero(weights)
        oob[t] = weights == 0
        trees.append(
            _grow_gini(
                arr, labels, weights, presort, nan_mask, rows, 0, max_depth,
                mtry, float(min_samples_leaf), rng,
            )
        )
    return RandomForestModel(
        trees=tuple(trees),
        oob_masks=oob,
        n_features=p,
        feature_names=tuple(feature_names) if feature_names is not None else None,
    )


def rf_predict(model: RandomForestModel, x) -> np.ndarray:
    """Majority-vote class per row."""
    arr = _check_features(x, model.n_features)
    votes = np.zeros(arr.shape[0])
    for tree in model.trees:
        votes += (_tree_values(tree, arr) >= 0.5).astype(float)
    return (votes >= len(model.trees) / 2.0).astype(float)


def rf_oob_importances(model: RandomForestModel, X, y, seed: int = 0) -> np.ndarray:
    """Per-tree permutation importance on each tree's out-of-bag rows.

    Entry (t, j) is the drop in tree t's OOB accuracy after permuting
    feature j among its OOB rows; trees with no OOB rows contribute 0.
    """
    arr = _check_features(X, model.n_features)
    labels = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    out = np.zeros((len(model.trees), model.n_features))
    for t, tree in enumerate(model.trees):
        oob_rows = np.flatnonzero(model.oob_masks[t])
        if len(oob_rows) == 0:
            continue
        x_oob = arr[oob_rows]
        y_oob = labels[oob_rows]
        base = float(((_tree_values(tree, x_oob) >= 0.5) == y_oob).mean())
        for j in range(model.n_features):
            shuffled = x_oob.copy()
            shuffled[:, j] = shuffled[rng.permutation(len(oob_rows)), j]
            acc = float(((_tree_values(tree, shuffled) >= 0.5) == y_oob).mean())
            out[t, j] = base - acc
    return out
