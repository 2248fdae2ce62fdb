"""Datasets, splits, metrics, class separability and class weights."""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllDegenerate,
    DegenerateVariance,
    FractionOutOfRange,
    ImbalanceError,
    InvalidDataset,
    LengthMismatch,
    MissingClass,
    RankDeficient,
    ZeroMean,
)

SEED_MASK = (1 << 64) - 1


def derive_seed(*parts) -> int:
    """Deterministically mix ints/strings into a 64-bit seed.

    String parts are hashed with blake2b so the result does not depend on
    PYTHONHASHSEED.
    """
    words = []
    for part in parts:
        if isinstance(part, str):
            digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
            words.append(int.from_bytes(digest, "little"))
        else:
            words.append(int(part) & SEED_MASK)
    ss = np.random.SeedSequence(words)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed) & SEED_MASK)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus integer labels in ``0..n_classes-1``."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int = 0

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise InvalidDataset("features must be a 2-D matrix")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise InvalidDataset("labels must be a vector with one entry per row")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise InvalidDataset("labels must be integers")
        y = y.astype(np.int64)
        if not np.all(np.isfinite(X)):
            raise InvalidDataset("features contain non-finite values")
        if y.size and y.min() < 0:
            raise InvalidDataset("labels must be non-negative")
        n_classes = int(self.n_classes) or (int(y.max()) + 1 if y.size else 0)
        if y.size and y.max() >= n_classes:
            raise InvalidDataset(f"label {int(y.max())} >= n_classes={n_classes}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "n_classes", n_classes)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    @property
    def class_counts(self) -> dict[int, int]:
        return {c: int(n) for c, n in enumerate(self.counts)}

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.labels[idx], self.n_classes)

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.features, labels, self.n_classes)

    def majority_class(self) -> int:
        return int(np.argmax(self.counts))

    def minority_class(self) -> int:
        counts = self.counts.astype(float)
        counts[counts == 0] = np.inf
        return int(np.argmin(counts))


def concat(a: Dataset, b: Dataset) -> Dataset:
    return Dataset(
        np.vstack([a.features, b.features]),
        np.concatenate([a.labels, b.labels]),
        max(a.n_classes, b.n_classes),
    )


# ---------------------------------------------------------------- separability


@dataclass(frozen=True)
class FdrScore:
    per_feature: np.ndarray
    mean: float


def compute_fdr(ds: Dataset) -> FdrScore:
    """Per-feature Fisher discriminant ratio and its mean over features.

    Class variances are population variances. Features whose within-class
    scatter is zero are reported as ``inf`` and left out of the mean.
    """
    present = np.flatnonzero(ds.counts)
    if present.size < 2:
        raise MissingClass("FDR needs at least two populated classes")
    X = ds.features
    mu = X.mean(axis=0)
    num = np.zeros(ds.n_features)
    den = np.zeros(ds.n_features)
    for c in present:
        Xc = X[ds.labels == c]
        n_c = Xc.shape[0]
        mu_c = Xc.mean(axis=0)
        num += n_c * (mu_c - mu) ** 2
        den += n_c * Xc.var(axis=0)
    degenerate = den == 0.0
    per_feature = np.full(ds.n_features, np.inf)
    per_feature[~degenerate] = num[~degenerate] / den[~degenerate]
    if degenerate.all():
        raise AllDegenerate("every feature has zero within-class variance")
    if degenerate.any():
        warnings.warn(
            f"features {np.flatnonzero(degenerate).tolist()} have zero within-class "
            "variance; excluded from the FDR mean",
            DegenerateVariance,
            stacklevel=2,
        )
    return FdrScore(per_feature, float(per_feature[~degenerate].mean()))


# ---------------------------------------------------------------- class weights


@dataclass(frozen=True)
class ClassWeights:
    weights: np.ndarray

    def __getitem__(self, c):
        return float(self.weights[c])

    def as_dict(self) -> dict[int, float]:
        return {c: float(w) for c, w in enumerate(self.weights)}

    def per_sample(self, labels) -> np.ndarray:
        return self.weights[np.asarray(labels)]


def class_weights_from_counts(counts) -> ClassWeights:
    counts = np.asarray(counts, dtype=np.float64)
    if np.any(counts <= 0):
        missing = np.flatnonzero(counts <= 0).tolist()
        raise MissingClass(f"classes {missing} have no samples")
    return ClassWeights(counts.sum() / (counts.size * counts))


def class_weights(ds: Dataset) -> ClassWeights:
    """``n_samples / (n_classes * n_i)`` for every class id."""
    return class_weights_from_counts(ds.counts)


# ---------------------------------------------------------------- splitting


def _round_half_up(x):
    return np.floor(np.asarray(x) + 0.5).astype(np.int64)


def stratified_indices(labels, fraction: float, seed, n_classes: int | None = None):
    """Return (rest_idx, held_idx) with ``round(n_i * fraction)`` held per class.

    Every class keeps at least one row on each side. Index arrays are sorted.
    """
    if not 0.0 < fraction < 1.0:
        raise FractionOutOfRange(f"fraction must lie in (0, 1), got {fraction}")
    labels = np.asarray(labels)
    n_classes = n_classes or int(labels.max()) + 1
    rng = rng_from(seed)
    held, rest = [], []
    for c in range(n_classes):
        idx = np.flatnonzero(labels == c)
        if idx.size == 0:
            continue
        if idx.size < 2:
            raise ImbalanceError(f"class {c} needs at least 2 samples to split")
        k = int(_round_half_up(idx.size * fraction))
        k = min(max(k, 1), idx.size - 1)
        perm = rng.permutation(idx)
        held.append(perm[:k])
        rest.append(perm[k:])
    return np.sort(np.concatenate(rest)), np.sort(np.concatenate(held))


def stratified_split(ds: Dataset, test_fraction: float, seed):
    train_idx, test_idx = stratified_indices(ds.labels, test_fraction, seed, ds.n_classes)
    return ds.subset(train_idx), ds.subset(test_idx)


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_f1: float
    weighted_f1: float
    accuracy: float
    support: np.ndarray = field(default=None)


def confusion_matrix(y_true, y_pred, n_classes: int | None = None) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.shape} vs {y_pred.shape}")
    if n_classes is None:
        n_classes = int(max(y_true.max(initial=0), y_pred.max(initial=0))) + 1
    cm = np.bincount(y_true * n_classes + y_pred, minlength=n_classes * n_classes)
    return ConfusionMatrix(cm.reshape(n_classes, n_classes))


def confusion_and_metrics(y_true, y_pred, n_classes: int | None = None):
    cm = confusion_matrix(y_true, y_pred, n_classes)
    m = cm.counts.astype(np.float64)
    tp = np.diag(m)
    pred_pos = m.sum(axis=0)
    support = m.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred_pos > 0, tp / pred_pos, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        denom = pred_pos + support
        f1 = np.where(denom > 0, 2.0 * tp / denom, 0.0)
    total = m.sum()
    report = MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        macro_f1=float(f1.mean()),
        weighted_f1=float((f1 * support).sum() / total) if total else 0.0,
        accuracy=float(tp.sum() / total) if total else 0.0,
        support=support.astype(np.int64),
    )
    return cm, report


def f1_binary(y_true, y_pred, positive: int = 1) -> float:
    y_true = np.asarray(y_true) == positive
    y_pred = np.asarray(y_pred) == positive
    tp = np.count_nonzero(y_true & y_pred)
    denom = np.count_nonzero(y_true) + np.count_nonzero(y_pred)
    return 2.0 * tp / denom if denom else 0.0


def vmr(scores) -> float:
    """Population variance divided by the mean."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size < 2:
        raise ImbalanceError("VMR needs at least two scores")
    mean = scores.mean()
    if mean <= 0.0:
        raise ZeroMean(f"mean of scores is {mean}")
    return float(scores.var() / mean)


# ---------------------------------------------------------------- projection


def pca_2d(ds: Dataset) -> np.ndarray:
    """Project standardized features onto the two leading principal axes."""
    if ds.n_features < 2 or ds.n_samples < 3:
        raise InvalidDataset("PCA needs >= 2 features and >= 3 samples")
    X = ds.features - ds.features.mean(axis=0)
    std = X.std(axis=0)
    X = X / np.where(std > 0, std, 1.0)
    cov = X.T @ X / X.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    tol = max(evals[0], 0.0) * 1e-12 * ds.n_features
    rank = int(np.count_nonzero(evals > tol))
    out = np.zeros((ds.n_samples, 2))
    for j in range(min(rank, 2)):
        v = evecs[:, j]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        out[:, j] = X @ v
    if rank < 2:
        warnings.warn(f"covariance rank {rank} < 2; zero padded", RankDeficient, stacklevel=2)
    return out
