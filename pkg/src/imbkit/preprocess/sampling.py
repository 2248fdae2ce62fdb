"""Over-sampling, under-sampling and Tomek-link cleaning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset, rng_from
from ..errors import (
    EmptyClass,
    KTooLarge,
    NoBoundarySamples,
    TargetExceedsCount,
    TooFewMinority,
)
from ..learners.neighbors import kmeans_fit, knn_table
from .spec import ResampleSpec, resolve_targets


def standardized(X) -> np.ndarray:
    """Zero-mean, unit-variance copy used for every neighbour search."""
    X = np.asarray(X, dtype=np.float64)
    std = X.std(axis=0)
    return (X - X.mean(axis=0)) / np.where(std > 0, std, 1.0)


def _append(ds: Dataset, X_new, y_new) -> Dataset:
    if len(y_new) == 0:
        return ds
    return Dataset(np.vstack([ds.features, np.asarray(X_new).reshape(-1, ds.n_features)]),
                   np.concatenate([ds.labels, np.asarray(y_new, dtype=np.int64)]),
                   ds.n_classes)


def ros(ds: Dataset, spec: ResampleSpec = ResampleSpec("ros"), seed=0) -> Dataset:
    """Duplicate rows of under-represented classes uniformly with replacement."""
    rng = rng_from(seed)
    targets = resolve_targets(ds, spec.target_counts)
    picks = []
    for c, (have, want) in enumerate(zip(ds.counts, targets)):
        if want <= have:
            continue
        idx = np.flatnonzero(ds.labels == c)
        if idx.size == 0:
            raise EmptyClass(f"class {c} has no rows to duplicate")
        picks.append(rng.choice(idx, size=want - have, replace=True))
    if not picks:
        return ds
    picks = np.concatenate(picks)
    return _append(ds, ds.features[picks], ds.labels[picks])


def _interpolate(X, anchors, neighbor_table, rng, lam=None):
    """One synthetic row per entry of ``anchors`` (positions into neighbor_table)."""
    k = neighbor_table.shape[1]
    chosen = neighbor_table[anchors, rng.integers(0, k, anchors.size)]
    gaps = rng.random(anchors.size) if lam is None else np.full(anchors.size, float(lam))
    return X[anchors] + gaps[:, None] * (X[chosen] - X[anchors]), chosen


def _minority_table(Z, idx, k):
    """k same-class neighbours for each row of ``idx`` as positions into ``idx``."""
    if idx.size <= k:
        raise TooFewMinority(f"{idx.size} rows in class but k_neighbors={k}")
    return knn_table(Z[idx], np.arange(idx.size), k)


def smote(ds: Dataset, spec: ResampleSpec = ResampleSpec("smote"), seed=0, lam=None) -> Dataset:
    """Interpolate between minority rows and their minority-class neighbours.

    ``lam`` pins the interpolation gap for every synthetic row (testing hook).
    """
    rng = rng_from(seed)
    targets = resolve_targets(ds, spec.target_counts)
    Z = standardized(ds.features)
    new_X, new_y = [], []
    for c, (have, want) in enumerate(zip(ds.counts, targets)):
        n_new = int(want - have)
        if n_new <= 0:
            continue
        idx = np.flatnonzero(ds.labels == c)
        table = _minority_table(Z, idx, spec.k_neighbors)
        anchors = rng.integers(0, idx.size, n_new)
        Xc = ds.features[idx]
        synth, _ = _interpolate(Xc, anchors, table, rng, lam)
        new_X.append(synth)
        new_y.append(np.full(n_new, c))
    if not new_X:
        return ds
    return _append(ds, np.vstack(new_X), np.concatenate(new_y))


def largest_remainder(shares, total) -> np.ndarray:
    """Integer allocation of ``total`` proportional to ``shares`` summing exactly."""
    shares = np.asarray(shares, dtype=np.float64)
    raw = shares / shares.sum() * total
    base = np.floor(raw).astype(np.int64)
    left = int(total - base.sum())
    if left > 0:
        order = np.lexsort((np.arange(raw.size), -(raw - base)))
        base[order[:left]] += 1
    return base


def _hardness(Z, labels, idx, c, k):
    return (labels[knn_table(Z, idx, k)] != c).sum(axis=1) / k


def adasyn_hardness(ds: Dataset, c: int, k: int) -> np.ndarray:
    """Fraction of other-class rows among each class-c row's k global neighbours."""
    idx = np.flatnonzero(ds.labels == c)
    return _hardness(standardized(ds.features), ds.labels, idx, c, k)


def adasyn(ds: Dataset, spec: ResampleSpec = ResampleSpec("adasyn"), seed=0) -> Dataset:
    """SMOTE with synthetic counts allocated by local classification hardness."""
    rng = rng_from(seed)
    targets = resolve_targets(ds, spec.target_counts)
    Z = standardized(ds.features)
    k = spec.k_neighbors
    new_X, new_y = [], []
    for c, (have, want) in enumerate(zip(ds.counts, targets)):
        n_new = int(want - have)
        if n_new <= 0:
            continue
        idx = np.flatnonzero(ds.labels == c)
        table = _minority_table(Z, idx, k)
        hardness = _hardness(Z, ds.labels, idx, c, k)
        if not np.any(hardness > 0):
            raise NoBoundarySamples(f"class {c}: no row has an other-class neighbour")
        alloc = largest_remainder(hardness, n_new)
        anchors = np.repeat(np.arange(idx.size), alloc)
        synth, _ = _interpolate(ds.features[idx], anchors, table, rng)
        new_X.append(synth)
        new_y.append(np.full(n_new, c))
    if not new_X:
        return ds
    return _append(ds, np.vstack(new_X), np.concatenate(new_y))


def rus(ds: Dataset, spec: ResampleSpec = ResampleSpec("rus", target_counts="balance-to-minority"),
        seed=0) -> Dataset:
    """Drop rows of over-represented classes uniformly without replacement."""
    rng = rng_from(seed)
    targets = resolve_targets(ds, spec.target_counts)
    keep = []
    for c, (have, want) in enumerate(zip(ds.counts, targets)):
        idx = np.flatnonzero(ds.labels == c)
        if want > have:
            raise TargetExceedsCount(f"class {c}: target {want} > {have} rows")
        keep.append(idx if want == have else rng.choice(idx, size=want, replace=False))
    return ds.subset(np.sort(np.concatenate(keep)))


def cluster_centroids(ds: Dataset, spec: ResampleSpec = ResampleSpec("cluster_centroids"),
                      seed=0) -> Dataset:
    """Replace the majority class by the centroids of a k-means partition of it."""
    major = ds.majority_class()
    counts = ds.counts
    k = spec.n_clusters if spec.n_clusters is not None else int(counts[counts > 0].min())
    idx = np.flatnonzero(ds.labels == major)
    if k > idx.size or k < 1:
        raise KTooLarge(f"n_clusters={k} with {idx.size} majority rows")
    model = kmeans_fit(ds.features[idx], k, seed=seed)
    rest = np.flatnonzero(ds.labels != major)
    return Dataset(np.vstack([ds.features[rest], model.centroids]),
                   np.concatenate([ds.labels[rest], np.full(k, major)]), ds.n_classes)


@dataclass(frozen=True)
class TomekPair:
    index_a: int
    index_b: int


def find_tomek_links(ds: Dataset) -> list:
    """Mutual 1-NN pairs with different labels (standardized Euclidean)."""
    if ds.n_samples < 2:
        return []
    Z = standardized(ds.features)
    nn = knn_table(Z, np.arange(ds.n_samples), 1)[:, 0]
    a = np.arange(ds.n_samples)
    mask = (nn[nn] == a) & (a < nn) & (ds.labels != ds.labels[nn])
    return [TomekPair(int(i), int(nn[i])) for i in np.flatnonzero(mask)]


def remove_tomek_majority(ds: Dataset, reference_counts=None) -> Dataset:
    """Drop, from each Tomek link, the member whose class is larger.

    Class size is read from ``reference_counts`` (the counts before any
    over-sampling); links between equally sized classes are left alone.
    """
    ref = ds.counts if reference_counts is None else np.asarray(reference_counts)
    drop = []
    for pair in find_tomek_links(ds):
        ca, cb = ds.labels[pair.index_a], ds.labels[pair.index_b]
        if ref[ca] > ref[cb]:
            drop.append(pair.index_a)
        elif ref[cb] > ref[ca]:
            drop.append(pair.index_b)
    if not drop:
        return ds
    keep = np.setdiff1d(np.arange(ds.n_samples), drop)
    return ds.subset(keep)


def smote_tomek(ds: Dataset, spec: ResampleSpec = ResampleSpec("smote_tomek"), seed=0) -> Dataset:
    oversampled = smote(ds, spec, seed)
    return remove_tomek_majority(oversampled, reference_counts=ds.counts)
