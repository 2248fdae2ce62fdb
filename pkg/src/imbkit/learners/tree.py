"""CART classification trees (weighted Gini) and bootstrap random forests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from ..core import Dataset, derive_seed, rng_from
from ..errors import EmptyDataset, ShapeMismatch


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = None
    min_samples_leaf: int = 1
    # None -> all features in column order; "sqrt" -> max(1, int(sqrt(d))); int -> that many
    max_features: int | str | None = None


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 100
    max_features: int | str | None = "sqrt"
    max_depth: int | None = None
    min_samples_leaf: int = 1
    bootstrap: bool = True


@dataclass
class TreeModel:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # [n_nodes, n_classes] leaf class distributions
    n_features: int
    max_depth: int | None = None
    min_samples_leaf: int = 1

    @property
    def n_classes(self) -> int:
        return self.value.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        X = _check_width(X, self.n_features)
        return _apply(self.feature, self.threshold, self.left, self.right, X)

    def predict_proba(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def same_structure(self, other: "TreeModel") -> bool:
        return (
            np.array_equal(self.feature, other.feature)
            and np.array_equal(self.threshold, other.threshold)
            and np.array_equal(self.left, other.left)
            and np.array_equal(self.right, other.right)
        )


@dataclass
class ForestModel:
    trees: list
    n_estimators: int
    tree_seeds: list = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return self.trees[0].n_classes

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def predict_proba(self, X) -> np.ndarray:
        X = _check_width(X, self.n_features)
        total = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees:
            total += tree.value[_apply(tree.feature, tree.threshold, tree.left, tree.right, X)]
        return total / len(self.trees)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def _check_width(X, width):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != width:
        raise ShapeMismatch(f"expected {width} feature columns, got shape {X.shape}")
    return X


@numba.njit(cache=True)
def _apply(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@numba.njit(cache=True)
def _build(X, y, w, n_classes, max_depth, min_leaf, max_features, shuffle, seed):
    np.random.seed(seed)
    n, d = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_classes))

    idx = np.arange(n)
    # stack entries: node id, start, end, depth
    stack = np.empty((cap, 4), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    counts = np.zeros(n_classes)
    cl = np.zeros(n_classes)
    cr = np.zeros(n_classes)
    feats = np.arange(d)
    vals = np.empty(n)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start

        counts[:] = 0.0
        for i in range(start, end):
            counts[y[idx[i]]] += w[idx[i]]
        total = counts.sum()
        if total > 0:
            for c in range(n_classes):
                value[node, c] = counts[c] / total
        else:
            for c in range(n_classes):
                value[node, c] = 1.0 / n_classes

        n_nonzero = 0
        for c in range(n_classes):
            if counts[c] > 0:
                n_nonzero += 1
        if n_nonzero <= 1 or m < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue

        if shuffle:
            for j in range(d - 1, 0, -1):
                r = np.random.randint(0, j + 1)
                tmp = feats[j]
                feats[j] = feats[r]
                feats[r] = tmp

        best_score = -1.0
        best_feat = -1
        best_thr = 0.0
        best_pos = -1
        visited = 0
        for fi in range(d):
            if visited >= max_features and best_feat >= 0:
                break
            f = feats[fi]
            for i in range(m):
                vals[i] = X[idx[start + i], f]
            order = np.argsort(vals[:m], kind="mergesort")
            visited += 1
            if vals[order[0]] == vals[order[m - 1]]:
                continue
            cl[:] = 0.0
            cr[:] = counts
            wl = 0.0
            wr = total
            for p in range(1, m):
                s = idx[start + order[p - 1]]
                ws = w[s]
                cl[y[s]] += ws
                cr[y[s]] -= ws
                wl += ws
                wr -= ws
                if p < min_leaf or m - p < min_leaf:
                    continue
                v0 = vals[order[p - 1]]
                v1 = vals[order[p]]
                if v0 == v1:
                    continue
                if wl <= 0.0 or wr <= 0.0:
                    continue
                sl = 0.0
                sr = 0.0
                for c in range(n_classes):
                    sl += cl[c] * cl[c]
                    sr += cr[c] * cr[c]
                score = sl / wl + sr / wr
                if score > best_score:
                    best_score = score
                    best_feat = f
                    best_pos = p
                    thr = 0.5 * (v0 + v1)
                    if thr >= v1 or thr < v0:
                        thr = v0
                    best_thr = thr
        if best_feat < 0:
            continue

        for i in range(m):
            vals[i] = X[idx[start + i], best_feat]
        best_order = np.argsort(vals[:m], kind="mergesort")
        seg = np.empty(m, dtype=np.int64)
        for i in range(m):
            seg[i] = idx[start + best_order[i]]
        for i in range(m):
            idx[start + i] = seg[i]

        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = lnode
        right[node] = rnode
        mid = start + best_pos
        stack[top, 0] = rnode
        stack[top, 1] = mid
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lnode
        stack[top, 1] = start
        stack[top, 2] = mid
        stack[top, 3] = depth + 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


def _resolve_max_features(spec, d):
    if spec is None:
        return d, False
    if spec == "sqrt":
        return max(1, int(np.sqrt(d))), True
    if isinstance(spec, str):
        raise ValueError(f"unknown max_features {spec!r}")
    return max(1, min(int(spec), d)), int(spec) < d


def _fit_arrays(X, y, w, n_classes, cfg: TreeConfig, seed) -> TreeModel:
    keep = w > 0
    X = np.ascontiguousarray(X[keep], dtype=np.float64)
    y = np.ascontiguousarray(y[keep], dtype=np.int64)
    w = np.ascontiguousarray(w[keep], dtype=np.float64)
    if X.shape[0] == 0:
        raise EmptyDataset("no rows with positive weight")
    max_features, shuffle = _resolve_max_features(cfg.max_features, X.shape[1])
    max_depth = -1 if cfg.max_depth is None else int(cfg.max_depth)
    nb_seed = int(seed) % (2**32 - 1)
    parts = _build(X, y, w, int(n_classes), max_depth, int(cfg.min_samples_leaf),
                   max_features, shuffle, nb_seed)
    return TreeModel(*parts, n_features=X.shape[1], max_depth=cfg.max_depth,
                     min_samples_leaf=cfg.min_samples_leaf)


def train_tree(ds: Dataset, sample_weights=None, cfg: TreeConfig = TreeConfig(), seed=0) -> TreeModel:
    """Greedy weighted-Gini CART tree."""
    if ds.n_samples == 0:
        raise EmptyDataset("cannot fit a tree on zero rows")
    if ds.n_samples < cfg.min_samples_leaf:
        raise EmptyDataset(f"{ds.n_samples} rows < min_samples_leaf={cfg.min_samples_leaf}")
    w = np.ones(ds.n_samples) if sample_weights is None else np.asarray(sample_weights, float)
    if w.shape != (ds.n_samples,):
        raise ShapeMismatch("sample_weights must have one entry per row")
    return _fit_arrays(ds.features, ds.labels, w, ds.n_classes, cfg, seed)


def train_forest(ds: Dataset, cfg: ForestConfig = ForestConfig(), seed=0, sample_weights=None,
                 row_sampler=None) -> ForestModel:
    """Bootstrap forest of CART trees with per-split feature subsampling.

    ``row_sampler(rng) -> index array`` replaces the plain bootstrap; balanced
    forests use it to draw each tree's rows.
    """
    if ds.n_samples == 0:
        raise EmptyDataset("cannot fit a forest on zero rows")
    if cfg.n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    base_w = np.ones(ds.n_samples) if sample_weights is None else np.asarray(sample_weights, float)
    tree_cfg = TreeConfig(cfg.max_depth, cfg.min_samples_leaf, cfg.max_features)
    trees, seeds = [], []
    for t in range(cfg.n_estimators):
        tree_seed = derive_seed(seed, t)
        rng = rng_from(tree_seed)
        if row_sampler is not None:
            draws = np.bincount(row_sampler(rng), minlength=ds.n_samples).astype(float)
        elif cfg.bootstrap:
            draws = np.bincount(rng.integers(0, ds.n_samples, ds.n_samples),
                                minlength=ds.n_samples).astype(float)
        else:
            draws = np.ones(ds.n_samples)
        trees.append(_fit_arrays(ds.features, ds.labels, base_w * draws, ds.n_classes,
                                 tree_cfg, tree_seed))
        seeds.append(tree_seed)
    return ForestModel(trees, cfg.n_estimators, seeds)
