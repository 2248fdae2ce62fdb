"""Prediction-centric mitigation: thresholds, reweighting, calibration, sample weighting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ClassWeights, Dataset
from .errors import ImbalanceError, ShapeMismatch, SingleClassLabels, ZeroCosts
from .learners import ForestConfig, LossSpec, MlpConfig, TreeConfig, train_forest, train_mlp, train_tree

RATIO_POLICY = "ratio_then_argmax"
TAU_FLOOR = 1e-12


@dataclass(frozen=True)
class ThresholdRule:
    thresholds: np.ndarray  # one entry for binary rules, one per class otherwise
    policy: str = RATIO_POLICY
    best_f1: np.ndarray | None = None

    @property
    def tau(self) -> float:
        return float(self.thresholds[0])

    @property
    def is_binary(self) -> bool:
        return self.thresholds.size == 1

    def apply(self, probs) -> np.ndarray:
        probs = np.asarray(probs, dtype=np.float64)
        if self.is_binary:
            scores = probs[:, 1] if probs.ndim == 2 else probs
            return (scores >= self.tau).astype(np.int64)
        return ovr_decide(probs, self.thresholds, self.policy)


def threshold_grid(delta: float) -> np.ndarray:
    steps = int(round(1.0 / delta))
    if not np.isclose(steps * delta, 1.0):
        raise ImbalanceError(f"step {delta} does not divide [0, 1]")
    return np.arange(steps + 1) / steps


def _f1_curve(scores, positives, grid):
    """F1 of the positive class at each grid threshold (predict positive when score >= tau)."""
    order = np.sort(scores)
    n = scores.size
    n_pos = int(positives.sum())
    pos_sorted = np.sort(scores[positives])
    # predicted positive count and TP for every tau via binary search
    pred_pos = n - np.searchsorted(order, grid, side="left")
    tp = n_pos - np.searchsorted(pos_sorted, grid, side="left")
    denom = pred_pos + n_pos
    return np.where(denom > 0, 2.0 * tp / np.maximum(denom, 1), 0.0)


def tune_threshold(probs_positive, y_true, delta: float = 0.01) -> ThresholdRule:
    """Smallest grid threshold maximising positive-class F1."""
    scores = np.asarray(probs_positive, dtype=np.float64)
    y = np.asarray(y_true)
    if scores.shape != y.shape:
        raise ShapeMismatch(f"{scores.shape} vs {y.shape}")
    positives = y == 1
    if positives.all() or not positives.any():
        raise SingleClassLabels("threshold tuning needs both classes")
    grid = threshold_grid(delta)
    f1 = _f1_curve(scores, positives, grid)
    best = int(np.argmax(f1))  # first maximum -> smallest tau
    return ThresholdRule(np.array([grid[best]]), "binary", np.array([f1[best]]))


def ovr_decide(probs, thresholds, policy: str = RATIO_POLICY) -> np.ndarray:
    """Among classes clearing their threshold pick max p/tau; none clear -> argmax p."""
    if policy != RATIO_POLICY:
        raise ImbalanceError(f"unknown decision policy {policy!r}")
    probs = np.asarray(probs, dtype=np.float64)
    tau = np.asarray(thresholds, dtype=np.float64)
    ok = probs >= tau
    ratio = np.where(ok, probs / np.maximum(tau, TAU_FLOOR), -np.inf)
    out = np.argmax(ratio, axis=1)
    none = ~ok.any(axis=1)
    out[none] = np.argmax(probs[none], axis=1)
    return out


def tune_thresholds_ovr(probs, y_true, delta: float = 0.01) -> ThresholdRule:
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y_true)
    C = probs.shape[1]
    if C < 3:
        raise ImbalanceError("one-vs-rest tuning is for three or more classes")
    taus = np.full(C, 0.5)
    best = np.zeros(C)
    for c in range(C):
        try:
            rule = tune_threshold(probs[:, c], (y == c).astype(int), delta)
        except SingleClassLabels:
            continue
        taus[c] = rule.tau
        best[c] = rule.best_f1[0]
    return ThresholdRule(taus, RATIO_POLICY, best)


@dataclass(frozen=True)
class CostSpec:
    c_fp: object  # scalar, or per-class vector
    c_fn: object


def cost_threshold(costs: CostSpec):
    """``C_FP / (C_FP + C_FN)``; per-class vectors give a one-vs-rest rule."""
    fp = np.asarray(costs.c_fp, dtype=np.float64)
    fn = np.asarray(costs.c_fn, dtype=np.float64)
    if np.any(fp < 0) or np.any(fn < 0):
        raise ImbalanceError("costs must be non-negative")
    total = fp + fn
    if np.any(total <= 0):
        raise ZeroCosts("C_FP + C_FN must be positive")
    tau = fp / total
    if tau.ndim == 0:
        return float(tau)
    return ThresholdRule(tau, RATIO_POLICY)


def reweight_predictions(probs, weights, scale: float = 1.0) -> np.ndarray:
    """Multiply class probabilities by ``1 + scale * (w_c - 1)`` and renormalise rows."""
    probs = np.asarray(probs, dtype=np.float64)
    w = np.asarray(weights.weights if isinstance(weights, ClassWeights) else weights, dtype=np.float64)
    if probs.ndim != 2 or w.shape != (probs.shape[1],):
        raise ShapeMismatch(f"{w.size} weights for probability shape {probs.shape}")
    if scale < 0:
        raise ImbalanceError("scale must be non-negative")
    factor = 1.0 + scale * (w - 1.0)
    if np.any(factor <= 0):
        raise ImbalanceError("scaled weights must stay positive")
    out = probs * factor
    return out / out.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------- isotonic calibration


@dataclass(frozen=True)
class IsotonicMap:
    breakpoints: np.ndarray
    values: np.ndarray

    def __call__(self, scores) -> np.ndarray:
        return isotonic_apply(self, scores)


def pava(targets, weights=None) -> np.ndarray:
    """Pool-adjacent-violators: least-squares non-decreasing fit of ``targets``."""
    y = np.asarray(targets, dtype=np.float64)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)
    means, wts, sizes = [], [], []
    for yi, wi in zip(y, w):
        means.append(yi)
        wts.append(wi)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, s2 = means.pop(), wts.pop(), sizes.pop()
            m1, w1, s1 = means.pop(), wts.pop(), sizes.pop()
            wt = w1 + w2
            means.append((m1 * w1 + m2 * w2) / wt)
            wts.append(wt)
            sizes.append(s1 + s2)
    return np.repeat(means, sizes)


def isotonic_fit(scores, y_binary) -> IsotonicMap:
    """Monotone map from scores to positive frequency; equal scores are pooled first."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y_binary, dtype=np.float64)
    if s.shape != y.shape or s.size < 2:
        raise ShapeMismatch("need >= 2 scores with matching labels")
    if np.all(y == y[0]):
        raise SingleClassLabels("isotonic calibration needs both labels")
    uniq, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=y)
    fitted = pava(sums / counts, counts)
    return IsotonicMap(uniq, np.clip(fitted, 0.0, 1.0))


def isotonic_apply(m: IsotonicMap, scores) -> np.ndarray:
    """Step function: value of the largest breakpoint <= score, clamped at both ends."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.searchsorted(m.breakpoints, s, side="right") - 1
    return m.values[np.clip(pos, 0, m.values.size - 1)]


@dataclass(frozen=True)
class IsotonicCalibrator:
    maps: list  # one map per class (binary: a single map for class 1)

    def apply(self, probs) -> np.ndarray:
        probs = np.asarray(probs, dtype=np.float64)
        if len(self.maps) == 1 and probs.shape[1] == 2:
            p1 = isotonic_apply(self.maps[0], probs[:, 1])
            return np.column_stack([1.0 - p1, p1])
        out = np.column_stack([isotonic_apply(m, probs[:, c]) if m is not None else probs[:, c]
                               for c, m in enumerate(self.maps)])
        total = out.sum(axis=1, keepdims=True)
        uniform = np.full_like(out, 1.0 / out.shape[1])
        return np.where(total > 0, out / np.where(total > 0, total, 1.0), uniform)


def calibrate(probs, y_true) -> IsotonicCalibrator:
    """Per-class one-vs-rest isotonic maps (a single map for binary tasks)."""
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y_true)
    if probs.shape[1] == 2:
        return IsotonicCalibrator([isotonic_fit(probs[:, 1], (y == 1).astype(float))])
    maps = []
    for c in range(probs.shape[1]):
        target = (y == c).astype(float)
        maps.append(isotonic_fit(probs[:, c], target) if 0 < target.sum() < target.size else None)
    return IsotonicCalibrator(maps)


# ---------------------------------------------------------------- sample weighting


def _fit_weighted(learner, ds, weights, seed, cfg):
    if learner == "tree":
        return train_tree(ds, weights, cfg or TreeConfig(), seed)
    if learner == "forest":
        return train_forest(ds, cfg or ForestConfig(), seed, sample_weights=weights)
    if learner == "mlp":
        return train_mlp(ds, cfg or MlpConfig(), LossSpec(), seed, sample_weights=weights)
    raise ImbalanceError(f"learner {learner!r} does not take sample weights")


def misclassified_mask(model, ds: Dataset) -> np.ndarray:
    return model.predict(ds.features) != ds.labels


def sample_weighting(ds: Dataset, learner: str = "forest", factor: float = 2.0, seed=0, cfg=None,
                     return_weights: bool = False):
    """Train, up-weight the rows the first model gets wrong, train once more."""
    first = _fit_weighted(learner, ds, np.ones(ds.n_samples), seed, cfg)
    weights = np.ones(ds.n_samples)
    weights[misclassified_mask(first, ds)] *= factor
    final = _fit_weighted(learner, ds, weights, seed, cfg)
    return (final, weights) if return_weights else final


__all__ = [
    "CostSpec", "IsotonicCalibrator", "IsotonicMap", "ThresholdRule", "calibrate",
    "cost_threshold", "isotonic_apply", "isotonic_fit", "misclassified_mask",
    "ovr_decide", "pava", "reweight_predictions", "sample_weighting", "threshold_grid",
    "tune_threshold", "tune_thresholds_ovr",
]
