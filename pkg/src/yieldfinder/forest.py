"""Bagged regression trees with variance-reduction splits.

Trees grow greedily: at each node a random subset of features is drawn,
every midpoint between consecutive distinct values is scored by the
decrease in summed squared error, and ties go to the lowest feature
index, then the lowest threshold. Growth stops when a node is pure, at
or below the minimum size, or no split helps.

Determinism is a contract here. Tree i draws from its own generator
keyed by (seed, i), so results are bit-identical for any worker count
and existing trees never change when the forest grows.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SpecMismatch, TooFewRows, ValidationError
from .model import ForestConfig, ModelSpec

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class Leaf:
    prediction: float
    n_samples: int


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    n_samples: int
    left: "Leaf | Split"
    right: "Leaf | Split"


TreeNode = Leaf | Split


def _best_split(X: np.ndarray, y: np.ndarray, idx: np.ndarray, candidates: np.ndarray):
    """Best (gain, feature, threshold) over candidate columns, or None.

    Gain is SSE(parent) - SSE(children), computed from prefix sums of the
    per-column sorted targets. Thresholds are midpoints between
    consecutive distinct values; a midpoint that rounds up to the upper
    value cannot separate the rows and is skipped.
    """
    n = len(idx)
    Xc = X[np.ix_(idx, candidates)]
    order = np.argsort(Xc, axis=0, kind="stable")
    Xs = np.take_along_axis(Xc, order, axis=0)
    Ys = y[idx][order]

    csum = np.cumsum(Ys, axis=0)
    total = csum[-1]
    left_counts = np.arange(1, n, dtype=float)[:, None]
    left_sums = csum[:-1]
    right_sums = total[None, :] - left_sums
    gains = left_sums**2 / left_counts + right_sums**2 / (n - left_counts) - (total**2 / n)[None, :]

    thresholds = (Xs[:-1] + Xs[1:]) / 2.0
    separable = (Xs[:-1] < Xs[1:]) & (thresholds < Xs[1:])
    gains = np.where(separable, gains, -np.inf)

    best_gain = float(gains.max())
    if not best_gain > 0.0:
        return None
    # Splits on different features that induce the same partition are
    # exact ties in real arithmetic but land an ulp apart here, so a bare
    # argmax would break them by rounding noise instead of by the rule.
    # Anything within a vanishing slack of the max counts as tied;
    # argwhere on the transposed matrix walks lowest feature first, then
    # lowest threshold.
    slack = 1e-10 * float(np.sum(y[idx] ** 2))
    column, position = (int(v) for v in np.argwhere(gains.T >= best_gain - slack)[0])
    return int(candidates[column]), float(thresholds[position, column])


def tree_fit(X: np.ndarray, y: np.ndarray, mtry: int, min_leaf: int, rng: np.random.Generator,
             idx: np.ndarray | None = None) -> TreeNode:
    """Grow one tree on the rows in idx (all rows when omitted).

    Nodes are visited depth-first, left child first; each node draws its
    candidate features from rng before scoring, which pins the stream
    layout for reproducibility.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValidationError(f"bad shapes: X {X.shape}, y {y.shape}")
    n, p = X.shape
    if n == 0:
        raise TooFewRows("cannot grow a tree on zero rows")
    if not 1 <= mtry <= p:
        raise ValidationError(f"mtry must be in [1, {p}], got {mtry}")
    if idx is None:
        idx = np.arange(n)

    EXPAND, COMBINE = 0, 1
    tasks: list[tuple[int, object]] = [(EXPAND, idx)]
    done: list[TreeNode] = []
    while tasks:
        op, payload = tasks.pop()
        if op == COMBINE:
            feature, threshold, size = payload
            right = done.pop()
            left = done.pop()
            done.append(Split(feature=feature, threshold=threshold, n_samples=size, left=left, right=right))
            continue
        rows = payload
        node_y = y[rows]
        if len(rows) <= min_leaf or node_y.min() == node_y.max():
            done.append(Leaf(prediction=float(node_y.mean()), n_samples=len(rows)))
            continue
        candidates = np.sort(rng.permutation(p)[:mtry])
        best = _best_split(X, y, rows, candidates)
        if best is None:
            done.append(Leaf(prediction=float(node_y.mean()), n_samples=len(rows)))
            continue
        feature, threshold = best
        goes_left = X[rows, feature] <= threshold
        tasks.append((COMBINE, (feature, threshold, len(rows))))
        tasks.append((EXPAND, rows[~goes_left]))
        tasks.append((EXPAND, rows[goes_left]))
    return done[0]


def tree_predict(node: TreeNode, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = np.empty(X.shape[0])
    stack: list[tuple[TreeNode, np.ndarray]] = [(node, np.arange(X.shape[0]))]
    while stack:
        current, rows = stack.pop()
        if isinstance(current, Leaf):
            out[rows] = current.prediction
            continue
        goes_left = X[rows, current.feature] <= current.threshold
        stack.append((current.left, rows[goes_left]))
        stack.append((current.right, rows[~goes_left]))
    return out


@dataclass(frozen=True)
class Forest:
    trees: tuple[TreeNode, ...]
    config: ForestConfig
    mtry: int
    n_features: int
    feature_names: tuple[str, ...] | None = None
    spec: ModelSpec | None = None


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed & _SEED_MASK, tree_index))))


def forest_fit(X: np.ndarray, y: np.ndarray, config: ForestConfig, n_workers: int = 1,
               feature_names: Sequence[str] | None = None, spec: ModelSpec | None = None) -> Forest:
    """Fit a bagged forest; mtry defaults to ceil(p / 3).

    Each tree draws its bootstrap sample first, then grows, all from its
    own (seed, tree_index) stream. Workers only change wall time.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValidationError(f"bad shapes: X {X.shape}, y {y.shape}")
    n, p = X.shape
    if n == 0:
        raise TooFewRows("cannot fit a forest on zero rows")
    mtry = config.mtry if config.mtry is not None else math.ceil(p / 3)
    if not 1 <= mtry <= p:
        raise ValidationError(f"mtry must be in [1, {p}], got {mtry}")

    def build(tree_index: int) -> TreeNode:
        rng = _tree_rng(config.seed, tree_index)
        if config.bootstrap:
            rows = rng.integers(0, n, size=n)
        else:
            rows = np.arange(n)
        return tree_fit(X, y, mtry=mtry, min_leaf=config.min_leaf, rng=rng, idx=rows)

    if n_workers <= 1:
        trees = [build(i) for i in range(config.n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            trees = list(pool.map(build, range(config.n_trees)))

    return Forest(
        trees=tuple(trees),
        config=config,
        mtry=mtry,
        n_features=p,
        feature_names=tuple(feature_names) if feature_names is not None else None,
        spec=spec,
    )


def forest_predict(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Mean of the per-tree predictions."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise SpecMismatch(f"expected {forest.n_features} columns, got {X.shape}")
    total = np.zeros(X.shape[0])
    for tree in forest.trees:
        total += tree_predict(tree, X)
    return total / len(forest.trees)
