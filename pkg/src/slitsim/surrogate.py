"""Gradient-boosted regression trees used to rank candidate plans cheaply.

One model per objective, trained on (plan features, true objective) pairs
collected from local-search trajectories. Squared-error boosting: each tree
fits the current residuals, splits are chosen greedily by variance reduction
over midpoints of sorted unique feature values, and exact ties prefer the
lowest feature index then the lowest threshold. Surrogate outputs are only
ever used for ranking; they never enter an ObjectiveVector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .plans import SchedulingPlan
from .workload import Bucket

__all__ = [
    "RegressionTree",
    "GradBoostModel",
    "fit_gradboost",
    "featurize",
    "save_models",
    "load_models",
]

_MIN_GAIN = 1e-12


@dataclass
class RegressionTree:
    """Binary CART regressor stored as flat arrays.

    feature[i] < 0 marks a leaf with prediction value[i]; otherwise rows with
    x[feature[i]] <= threshold[i] go to left[i], the rest to right[i].
    """

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)
    _arrays: tuple | None = field(default=None, init=False, repr=False, compare=False)

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def fit(self, X: np.ndarray, y: np.ndarray, max_depth: int, min_leaf: int) -> "RegressionTree":
        if len(X) == 0:
            raise ValueError("cannot fit a tree on empty data")
        X = np.asarray(X)
        order = np.argsort(X, axis=0, kind="stable")
        self._grow(X, np.asarray(y), np.arange(len(X)), order, 0, max_depth, min_leaf)
        return self

    def _grow(self, X: np.ndarray, y: np.ndarray, idx: np.ndarray, order: np.ndarray,
              depth: int, max_depth: int, min_leaf: int) -> int:
        # idx is the node's rows ascending; order holds the same rows sorted
        # per feature column (stable, so ties stay in ascending-row order)
        node = self._new_node()
        ys = y[idx]
        self.value[node] = float(ys.mean())
        if depth >= max_depth or len(idx) < 2 * min_leaf:
            return node
        split = _best_split(X, y, idx, order, min_leaf)
        if split is None:
            return node
        f, t = split
        mask = X[idx, f] <= t
        lidx, ridx = idx[mask], idx[~mask]
        goes_left = np.zeros(len(X), dtype=bool)
        goes_left[lidx] = True
        keep = goes_left[order.T]
        lorder = order.T[keep].reshape(order.shape[1], len(lidx)).T
        rorder = order.T[~keep].reshape(order.shape[1], len(ridx)).T
        self.feature[node] = f
        self.threshold[node] = t
        self.left[node] = self._grow(X, y, lidx, lorder, depth + 1, max_depth, min_leaf)
        self.right[node] = self._grow(X, y, ridx, rorder, depth + 1, max_depth, min_leaf)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._arrays is None or len(self._arrays[0]) != len(self.feature):
            self._arrays = (
                np.asarray(self.feature, dtype=np.int64),
                np.asarray(self.left, dtype=np.int64),
                np.asarray(self.right, dtype=np.int64),
                np.asarray(self.threshold, dtype=float),
                np.asarray(self.value, dtype=float),
            )
        feat, left, right, thr, val = self._arrays
        node = np.zeros(len(X), dtype=np.int64)
        live = np.nonzero(feat[node] >= 0)[0]
        while len(live):
            cur = node[live]
            go_left = X[live, feat[cur]] <= thr[cur]
            node[live] = np.where(go_left, left[cur], right[cur])
            live = live[feat[node[live]] >= 0]
        return val[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RegressionTree":
        return cls(
            feature=[int(x) for x in d["feature"]],
            threshold=[float(x) for x in d["threshold"]],
            left=[int(x) for x in d["left"]],
            right=[int(x) for x in d["right"]],
            value=[float(x) for x in d["value"]],
        )


def _best_split(
    X: np.ndarray, y: np.ndarray, idx: np.ndarray, order: np.ndarray, min_leaf: int
) -> tuple[int, float] | None:
    """Greedy variance-reduction split; ties keep the lowest (feature, threshold).

    All features are scanned at once on the presorted column matrix: a split
    after prefix length k (1-based) is a candidate where the sorted value
    changes and both sides hold min_leaf rows, and its SSE comes from prefix
    sums of the column-sorted targets.
    """
    ys = y[idx]
    n = len(idx)
    parent_sse = float(((ys - ys.mean()) ** 2).sum())
    xo = X[order, np.arange(order.shape[1])]
    ks = np.arange(1, n)
    valid = (xo[1:] > xo[:-1]) & ((ks >= min_leaf) & (n - ks >= min_leaf))[:, None]
    if not valid.any():
        return None
    yo = y[order]
    csum = np.cumsum(yo, axis=0)
    csq = np.cumsum(yo * yo, axis=0)
    ls, lq = csum[:-1], csq[:-1]
    rs, rq = csum[-1] - ls, csq[-1] - lq
    kcol = ks[:, None]
    sse = (lq - ls * ls / kcol) + (rq - rs * rs / (n - kcol))
    gain = np.where(valid, parent_sse - sse, -np.inf)
    # first flat max of the transpose = lowest (feature, threshold) on ties
    flat = int(np.argmax(gain.T))
    f, row = divmod(flat, n - 1)
    if not gain[row, f] > _MIN_GAIN:
        return None
    k = row + 1
    # midpoint of adjacent floats can round up to xo[k] and leave the right
    # side empty; fall back to the left value then
    t = float((xo[k - 1, f] + xo[k, f]) / 2.0)
    if t >= xo[k, f]:
        t = float(xo[k - 1, f])
    return f, t


@dataclass
class GradBoostModel:
    """Additive tree ensemble: prediction = base + lr * sum(tree outputs)."""

    base_value: float = 0.0
    learning_rate: float = 0.1
    trees: list[RegressionTree] = field(default_factory=list)
    n_trees: int = 50
    max_depth: int = 3
    min_leaf: int = 5

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(len(X), self.base_value)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out

    def to_dict(self) -> dict:
        return {
            "base_value": self.base_value,
            "learning_rate": self.learning_rate,
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "GradBoostModel":
        return cls(
            base_value=float(d["base_value"]),
            learning_rate=float(d["learning_rate"]),
            n_trees=int(d["n_trees"]),
            max_depth=int(d["max_depth"]),
            min_leaf=int(d["min_leaf"]),
            trees=[RegressionTree.from_dict(t) for t in d["trees"]],
        )


def fit_gradboost(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 50,
    max_depth: int = 3,
    learning_rate: float = 0.1,
    min_leaf: int = 5,
) -> GradBoostModel:
    """Squared-error gradient boosting.

    The pseudo-residuals of the squared-error loss are the plain residuals,
    so each round fits a tree to y minus the running prediction. Constant
    targets yield a zero-tree model; boosting also stops early once the
    residuals are numerically zero (further trees would be all-zero leaves).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(X) == 0:
        raise ValueError("cannot fit on empty data")
    if len(X) != len(y):
        raise ValueError(f"X has {len(X)} rows, y has {len(y)}")
    if len(X) < min_leaf:
        raise ValueError(f"need at least min_leaf={min_leaf} rows, have {len(X)}")
    model = GradBoostModel(
        base_value=float(y.mean()),
        learning_rate=learning_rate,
        n_trees=n_trees,
        max_depth=max_depth,
        min_leaf=min_leaf,
    )
    resid = y - model.base_value
    if float((resid * resid).sum()) < 1e-24:
        return model
    # the column sort depends only on X, so all rounds share one
    order = np.argsort(X, axis=0, kind="stable")
    idx = np.arange(len(X))
    for _ in range(n_trees):
        tree = RegressionTree()
        tree._grow(X, resid, idx, order, 0, max_depth, min_leaf)
        model.trees.append(tree)
        resid = resid - learning_rate * tree.predict(X)
        if float((resid * resid).sum()) < 1e-24:
            break
    return model


def featurize(
    plan: SchedulingPlan,
    predicted_counts: Mapping[Bucket, int],
) -> np.ndarray:
    """Fixed-order feature vector for a plan under a demand forecast.

    Layout: for every bucket in sorted bucket order, the per-location mass
    vector (location config order); then one aggregate block of per-location
    predicted load shares. Distinct plans over the same bucket set always map
    to distinct vectors because the raw distributions are embedded verbatim.
    """
    blocks = [plan.vector(b) for b in plan.buckets]
    total = float(sum(max(predicted_counts.get(b, 0), 0) for b in plan.buckets))
    load = np.zeros(len(plan.locations))
    if total > 0:
        for b in plan.buckets:
            c = max(predicted_counts.get(b, 0), 0)
            if c:
                load += (c / total) * plan.vector(b)
    blocks.append(load)
    return np.concatenate(blocks)


def save_models(models: Mapping[str, GradBoostModel], path: str | Path) -> None:
    doc = {name: m.to_dict() for name, m in models.items()}
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_models(path: str | Path) -> dict[str, GradBoostModel]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {name: GradBoostModel.from_dict(d) for name, d in doc.items()}
