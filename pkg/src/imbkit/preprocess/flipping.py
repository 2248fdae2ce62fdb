"""Heuristic label flipping: massaging, random perturbation, cluster-based massaging."""

from __future__ import annotations

import numpy as np

from ..core import Dataset, derive_seed, rng_from
from ..errors import KTooLarge
from ..learners.neighbors import kmeans_fit
from ..learners.tree import ForestConfig, train_forest

PROBE_TREES = 25


def massaging(ds: Dataset, flip_fraction: float = 0.2, seed=0, majority_class=None,
              minority_class=None) -> Dataset:
    """Relabel the majority rows a probe forest finds most minority-like.

    The top ``floor(flip_fraction * n_majority)`` majority rows by probe
    P(minority) become minority; ties go to the lower row index.
    """
    major, minor = _pair(ds, majority_class, minority_class)
    idx = np.flatnonzero(ds.labels == major)
    m = int(np.floor(flip_fraction * idx.size))
    if m == 0:
        return ds
    scores = massaging_scores(ds, seed, major, minor)
    order = np.lexsort((idx, -scores))
    labels = ds.labels.copy()
    labels[idx[order[:m]]] = minor
    return ds.with_labels(labels)


def massaging_scores(ds: Dataset, seed, majority_class, minority_class) -> np.ndarray:
    """Probe-forest P(minority) for each majority row, in row order."""
    probe = train_forest(ds, ForestConfig(n_estimators=PROBE_TREES), seed=derive_seed(seed, "probe"))
    rows = np.flatnonzero(ds.labels == majority_class)
    return probe.predict_proba(ds.features[rows])[:, minority_class]


def perturbation(ds: Dataset, p_majority_flip: float = 0.1, p_minority_flip: float = 0.01, seed=0,
                 majority_class=None, minority_class=None) -> Dataset:
    """Flip each label of the chosen pair with its class's probability.

    One uniform draw per row, in row order, whatever the row's class.
    """
    for p in (p_majority_flip, p_minority_flip):
        if not 0.0 <= p <= 1.0:
            raise ValueError("flip probabilities must lie in [0, 1]")
    major, minor = _pair(ds, majority_class, minority_class)
    draws = rng_from(seed).random(ds.n_samples)
    labels = ds.labels.copy()
    to_minor = (ds.labels == major) & (draws < p_majority_flip)
    to_major = (ds.labels == minor) & (draws < p_minority_flip)
    labels[to_minor] = minor
    labels[to_major] = major
    return ds.with_labels(labels)


def cluster_massaging(ds: Dataset, n_clusters: int = 5, flip_fraction: float = 0.20, seed=0,
                      majority_class=None, minority_class=None) -> Dataset:
    """Flip a fraction of the majority cluster nearest the minority centroid."""
    major, minor = _pair(ds, majority_class, minority_class)
    idx = np.flatnonzero(ds.labels == major)
    if n_clusters < 1 or n_clusters > idx.size:
        raise KTooLarge(f"n_clusters={n_clusters} with {idx.size} majority rows")
    model = kmeans_fit(ds.features[idx], n_clusters, seed=derive_seed(seed, "kmeans"))
    target = ds.features[ds.labels == minor].mean(axis=0)
    dist = np.sqrt(((model.centroids - target) ** 2).sum(axis=1))
    nearest = int(np.argmin(dist))
    members = idx[model.assignments == nearest]
    m = int(np.floor(flip_fraction * members.size))
    if m == 0:
        return ds
    chosen = rng_from(derive_seed(seed, "flip")).choice(members, size=m, replace=False)
    labels = ds.labels.copy()
    labels[chosen] = minor
    return ds.with_labels(labels)


def _pair(ds, majority_class, minority_class):
    counts = ds.counts.astype(float)
    major = int(np.argmax(counts)) if majority_class is None else int(majority_class)
    if minority_class is None:
        counts[counts == 0] = np.inf
        counts[major] = np.inf  # equal counts must not pick the same class twice
        minor = int(np.argmin(counts))
    else:
        minor = int(minority_class)
    return major, minor
