"""Regression random forest with exact split search.

Trees grow greedily on bootstrap samples: at every node a random subset of
features is considered, candidate thresholds are all midpoints between
consecutive sorted distinct feature values, and the split minimizing the
summed child squared error is taken (prefix-sum scan, so the search is exact
and O(n log n) per node). Leaves predict the mean target. The feature space
here is tiny (three columns), which keeps exhaustive threshold search cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """Flat-array tree: node k splits on feature[k] at threshold[k] and sends
    x <= threshold left; feature[k] == LEAF marks a leaf with value[k]."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] != LEAF
        return self.value[node]


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best (threshold, sse) splitting one feature column, or None."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    n = len(ys)
    s1 = np.cumsum(ys)
    s2 = np.cumsum(ys * ys)
    total1 = s1[-1]
    total2 = s2[-1]
    # split after position k-1 (left size k), only where the value changes
    ks = np.arange(min_leaf, n - min_leaf + 1)
    if len(ks) == 0:
        return None
    valid = xs[ks - 1] < xs[ks]
    ks = ks[valid]
    if len(ks) == 0:
        return None
    left1 = s1[ks - 1]
    left2 = s2[ks - 1]
    sse = (left2 - left1**2 / ks) + (
        (total2 - left2) - (total1 - left1) ** 2 / (n - ks)
    )
    best = int(np.argmin(sse))
    k = int(ks[best])
    threshold = 0.5 * (xs[k - 1] + xs[k])
    return threshold, float(sse[best])


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int,
    min_leaf: int,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> RegressionTree:
    """Grow a single tree. With max_features set, each node searches a random
    feature subset (sampled without replacement); otherwise all features."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n_features = X.shape[1]
    if max_features is None or max_features >= n_features:
        max_features = n_features
    if rng is None:
        rng = np.random.default_rng(0)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(0)
        right.append(0)
        value.append(0.0)
        return len(feature) - 1

    stack = [(new_node(), np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        value[node] = float(ys.mean())
        if depth >= max_depth or len(idx) < 2 * min_leaf or np.ptp(ys) == 0.0:
            continue
        candidates = np.sort(rng.choice(n_features, size=max_features, replace=False))
        best = None
        for f in candidates:
            found = _best_split(X[idx, f], ys, min_leaf)
            if found is not None and (best is None or found[1] < best[2]):
                best = (int(f), found[0], found[1])
        if best is None:
            continue
        f, thr, _ = best
        go_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node()
        right[node] = new_node()
        stack.append((right[node], idx[~go_left], depth + 1))
        stack.append((left[node], idx[go_left], depth + 1))

    return RegressionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
    )


@dataclass(frozen=True, eq=False)
class RegressionForest:
    trees: tuple[RegressionTree, ...]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        acc = np.zeros(len(X))
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int,
    max_depth: int,
    min_leaf: int,
    max_features: int,
    seed: int,
) -> RegressionForest:
    """Bootstrap-aggregated trees with per-tree derived seeds, so tree t is
    reproducible independently of how many trees run (or on which worker)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        boot = rng.integers(0, n, size=n)
        trees.append(
            fit_tree(X[boot], y[boot], max_depth, min_leaf, max_features, rng)
        )
    return RegressionForest(trees=tuple(trees))


def pack_forest(forest: RegressionForest) -> dict[str, np.ndarray]:
    """Flatten a forest into arrays (for single-file serialization)."""
    sizes = np.array([len(t.feature) for t in forest.trees], dtype=np.int64)
    return {
        "tree_sizes": sizes,
        "feature": np.concatenate([t.feature for t in forest.trees]),
        "threshold": np.concatenate([t.threshold for t in forest.trees]),
        "left": np.concatenate([t.left for t in forest.trees]),
        "right": np.concatenate([t.right for t in forest.trees]),
        "value": np.concatenate([t.value for t in forest.trees]),
    }


def unpack_forest(blob) -> RegressionForest:
    sizes = blob["tree_sizes"]
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    trees = []
    for t in range(len(sizes)):
        lo, hi = offsets[t], offsets[t + 1]
        trees.append(
            RegressionTree(
                feature=blob["feature"][lo:hi],
                threshold=blob["threshold"][lo:hi],
                left=blob["left"][lo:hi],
                right=blob["right"][lo:hi],
                value=blob["value"][lo:hi],
            )
        )
    return RegressionForest(trees=tuple(trees))
