"""Exact k-nearest-neighbour search and k-means clustering."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import rng_from
from ..errors import KTooLarge

_CHUNK_CELLS = 4_000_000


def sq_distances(queries, points) -> np.ndarray:
    """Exact squared Euclidean distances, row-chunked to bound memory."""
    Q = np.asarray(queries, dtype=np.float64)
    P = np.asarray(points, dtype=np.float64)
    out = np.empty((Q.shape[0], P.shape[0]))
    step = max(1, _CHUNK_CELLS // max(1, P.shape[0] * P.shape[1]))
    for s in range(0, Q.shape[0], step):
        diff = Q[s:s + step, None, :] - P[None, :, :]
        out[s:s + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def knn_neighbors(points, query, k, restrict_to_class=None, labels=None, exclude=None) -> np.ndarray:
    """Indices of the k nearest points to ``query``, nearest first.

    ``restrict_to_class`` keeps only points whose label matches; ``exclude``
    drops one index (the query's own row when it lives in the index).
    Ties go to the lower point index.
    """
    points = np.asarray(points, dtype=np.float64)
    eligible = np.ones(points.shape[0], dtype=bool)
    if restrict_to_class is not None:
        eligible &= np.asarray(labels) == restrict_to_class
    if exclude is not None:
        eligible[exclude] = False
    cand = np.flatnonzero(eligible)
    if k > cand.size:
        raise KTooLarge(f"k={k} but only {cand.size} eligible points")
    d = sq_distances(np.asarray(query, float).reshape(1, -1), points[cand])[0]
    return cand[np.argsort(d, kind="stable")[:k]]


def knn_table(points, queries_idx, k, candidates_idx=None) -> np.ndarray:
    """k-NN of each ``points[queries_idx]`` among ``candidates_idx`` (self excluded).

    Returns an int array [len(queries_idx), k] of point indices.
    """
    points = np.asarray(points, dtype=np.float64)
    queries_idx = np.asarray(queries_idx, dtype=np.int64)
    cand = np.arange(points.shape[0]) if candidates_idx is None else np.asarray(candidates_idx)
    n_self = np.isin(queries_idx, cand)
    available = cand.size - (1 if n_self.any() else 0)
    if k > available:
        raise KTooLarge(f"k={k} but only {available} eligible neighbours")
    out = np.empty((queries_idx.size, k), dtype=np.int64)
    pos = {int(c): j for j, c in enumerate(cand)}
    step = max(1, _CHUNK_CELLS // max(1, cand.size * points.shape[1]))
    for s in range(0, queries_idx.size, step):
        q = queries_idx[s:s + step]
        d = sq_distances(points[q], points[cand])
        for r, qi in enumerate(q):
            j = pos.get(int(qi))
            if j is not None:
                d[r, j] = np.inf
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        out[s:s + step] = cand[order]
    return out


@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    inertia_history: list = field(default_factory=list)
    n_iter: int = 0

    def predict(self, points) -> np.ndarray:
        return _assign(np.asarray(points, float), self.centroids)[0]


def _assign(X, C):
    d = sq_distances(X, C)
    lab = np.argmin(d, axis=1)
    return lab, d[np.arange(X.shape[0]), lab]


def _plusplus(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = sq_distances(X, centers[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            i = rng.integers(n)
        else:
            i = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            i = min(i, n - 1)
        centers[j] = X[i]
        closest = np.minimum(closest, sq_distances(X, centers[j:j + 1])[:, 0])
    return centers


def _update(X, lab, dist, centroids):
    k = centroids.shape[0]
    new = np.empty_like(centroids)
    counts = np.bincount(lab, minlength=k)
    for j in range(k):
        if counts[j]:
            new[j] = X[lab == j].mean(axis=0)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        # reseed each empty cluster on the currently worst-served point
        order = np.argsort(-dist, kind="stable")
        for rank, j in enumerate(empty):
            new[j] = X[order[rank]]
    return new


def kmeans_fit(points, k, seed=0, max_iter=300, tol=1e-6) -> KMeansModel:
    """k-means++ seeding followed by Lloyd iterations."""
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    if k < 1 or k > n:
        raise KTooLarge(f"k={k} with {n} points")
    rng = rng_from(seed)
    centroids = _plusplus(X, k, rng)
    lab, dist = _assign(X, centroids)
    history = [float(dist.sum())]
    it = 0
    for it in range(1, max_iter + 1):
        new = _update(X, lab, dist, centroids)
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        new_lab, dist = _assign(X, centroids)
        history.append(float(dist.sum()))
        stable = np.array_equal(new_lab, lab)
        lab = new_lab
        if stable or shift < tol:
            break
    # centroids are exact means of the final assignment
    centroids = _update(X, lab, dist, centroids)
    return KMeansModel(k, centroids, lab, float(dist.sum()), history, it)
