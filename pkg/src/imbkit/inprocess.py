"""Model-centric mitigation: class weighting, balanced ensembles and meta-learning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, class_weights, derive_seed, rng_from
from .errors import AllRoundsRejected, ImbalanceError, TooFewSamples
from .learners import (
    ForestConfig,
    LogisticConfig,
    LossSpec,
    MlpConfig,
    TreeConfig,
    train_forest,
    train_logistic,
    train_mlp,
    train_tree,
)

EPS_FLOOR = 1e-10
MAX_RETRIES = 10


def weighted_fit(learner: str, ds: Dataset, seed=0, cfg=None, focal_gamma: float | None = None):
    """Fit ``learner`` with class weights ``n / (C * n_c)``.

    Trees and forests receive them as per-sample weights; the MLP receives
    them as ``alpha`` of a weighted cross-entropy, or of a weighted focal
    loss when ``focal_gamma`` is given.
    """
    cw = class_weights(ds)
    if learner == "tree":
        return train_tree(ds, cw.per_sample(ds.labels), cfg or TreeConfig(), seed)
    if learner == "forest":
        return train_forest(ds, cfg or ForestConfig(), seed, sample_weights=cw.per_sample(ds.labels))
    if learner == "mlp":
        alpha = tuple(float(w) for w in cw.weights)
        if focal_gamma is None:
            loss = LossSpec("weighted_ce", 0.0, alpha)
        else:
            loss = LossSpec("weighted_focal", float(focal_gamma), alpha)
        return train_mlp(ds, cfg or MlpConfig(), loss, seed)
    raise ImbalanceError(f"unknown learner {learner!r}")


# ---------------------------------------------------------------- balanced bootstraps


def balanced_bootstrap_indices(labels, rng, n_classes=None, p=None) -> np.ndarray:
    """min-class-count rows per present class, drawn with replacement.

    ``p`` optionally biases the draw within each class (boosting weights).
    """
    labels = np.asarray(labels)
    n_classes = n_classes or int(labels.max()) + 1
    counts = np.bincount(labels, minlength=n_classes)
    present = np.flatnonzero(counts)
    if present.size < 2:
        raise ImbalanceError("balanced bootstrap needs at least two classes")
    size = int(counts[present].min())
    parts = []
    for c in present:
        idx = np.flatnonzero(labels == c)
        if p is None:
            parts.append(idx[rng.integers(0, idx.size, size)])
        else:
            pc = p[idx]
            pc = pc / pc.sum()
            parts.append(rng.choice(idx, size=size, replace=True, p=pc))
    return np.concatenate(parts)


def balanced_bootstrap(ds: Dataset, seed=0) -> Dataset:
    return ds.subset(balanced_bootstrap_indices(ds.labels, rng_from(seed), ds.n_classes))


# ---------------------------------------------------------------- ensembles


def vote(member_preds, member_probas, n_classes, weights=None) -> np.ndarray:
    """(Weighted) plurality vote; ties go to the higher mean probability, then the lower id."""
    member_preds = np.asarray(member_preds)
    n_members, n = member_preds.shape
    weights = np.ones(n_members) if weights is None else np.asarray(weights, float)
    tally = np.zeros((n, n_classes))
    for t in range(n_members):
        tally[np.arange(n), member_preds[t]] += weights[t]
    mean_proba = np.mean(member_probas, axis=0)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        best = np.flatnonzero(tally[i] == tally[i].max())
        if best.size > 1:
            sub = mean_proba[i, best]
            best = best[sub == sub.max()]
        out[i] = best[0]
    return out


@dataclass
class EnsembleModel:
    members: list
    rule: str  # majority_vote | weighted_vote | mean_proba
    n_classes: int
    alphas: list = field(default_factory=list)
    member_seeds: list = field(default_factory=list)

    def _member_outputs(self, X):
        probas = np.stack([m.predict_proba(X) for m in self.members])
        return probas, np.argmax(probas, axis=2)

    def predict_proba(self, X) -> np.ndarray:
        probas, preds = self._member_outputs(X)
        if self.rule == "mean_proba":
            return probas.mean(axis=0)
        weights = np.ones(len(self.members)) if self.rule == "majority_vote" else np.asarray(self.alphas)
        tally = np.zeros((probas.shape[1], self.n_classes))
        rows = np.arange(probas.shape[1])
        for t, w in enumerate(weights):
            tally[rows, preds[t]] += w
        return tally / tally.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        probas, preds = self._member_outputs(X)
        if self.rule == "mean_proba":
            return np.argmax(probas.mean(axis=0), axis=1)
        weights = None if self.rule == "majority_vote" else self.alphas
        return vote(preds, probas, self.n_classes, weights)


def _fit_base(base, ds, seed, cfg):
    if base == "tree":
        return train_tree(ds, None, cfg or TreeConfig(), seed)
    if base == "mlp":
        return train_mlp(ds, cfg or MlpConfig(), LossSpec(), seed)
    raise ImbalanceError(f"unknown base learner {base!r}")


def bagging_fit(ds: Dataset, base: str = "tree", n_estimators: int = 10, seed=0, cfg=None,
                member_seed=None) -> EnsembleModel:
    """Members trained on independent balanced bootstraps, combined by majority vote.

    ``member_seed`` forces every member onto the same seed (and so the same
    bootstrap); used to check the degenerate ensemble.
    """
    if n_estimators < 1:
        raise ImbalanceError("n_estimators must be >= 1")
    members, seeds = [], []
    for t in range(n_estimators):
        s = derive_seed(seed, "member", t) if member_seed is None else member_seed
        subset = balanced_bootstrap(ds, derive_seed(s, "rows"))
        members.append(_fit_base(base, subset, derive_seed(s, "fit"), cfg))
        seeds.append(s)
    return EnsembleModel(members, "majority_vote", ds.n_classes, member_seeds=seeds)


@dataclass
class BoostingTrace:
    errors: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    rejected: int = 0


def samme_alpha(eps: float, n_classes: int) -> float:
    eps = min(max(eps, EPS_FLOOR), 1.0 - EPS_FLOOR)
    return float(np.log((1.0 - eps) / eps) + np.log(n_classes - 1))


def boosting_fit(ds: Dataset, n_rounds: int = 10, seed=0, cfg: TreeConfig = TreeConfig(max_depth=3),
                 redraw: bool = True, trace: BoostingTrace | None = None) -> EnsembleModel:
    """SAMME boosting of shallow trees on weight-biased balanced bootstraps.

    A round whose weighted error reaches ``1 - 1/C`` is discarded and
    redrawn, at most ten times. A perfect round ends training early.
    ``redraw=False`` keeps round 1's bootstrap for every round.
    """
    if n_rounds < 1:
        raise ImbalanceError("n_rounds must be >= 1")
    C = ds.n_classes
    n = ds.n_samples
    w = np.full(n, 1.0 / n)
    members, alphas, seeds = [], [], []
    fixed_rows = None
    trace = trace if trace is not None else BoostingTrace()
    trace.weights.append(w.copy())
    for t in range(n_rounds):
        accepted = False
        for attempt in range(MAX_RETRIES + 1):
            s = derive_seed(seed, "round", t, attempt)
            rng = rng_from(s)
            if redraw or fixed_rows is None:
                rows = balanced_bootstrap_indices(ds.labels, rng, C, p=w)
                if not redraw:
                    fixed_rows = rows
            else:
                rows = fixed_rows
            member = train_tree(ds.subset(rows), None, cfg, s)
            miss = member.predict(ds.features) != ds.labels
            eps = float(w[miss].sum())
            if eps >= 1.0 - 1.0 / C:
                trace.rejected += 1
                continue
            accepted = True
            break
        if not accepted:
            break
        alpha = samme_alpha(eps, C)
        members.append(member)
        alphas.append(alpha)
        seeds.append(s)
        trace.errors.append(eps)
        if eps <= EPS_FLOOR:
            break
        w = np.where(miss, w * np.exp(alpha), w)
        w /= w.sum()
        trace.weights.append(w.copy())
    if not members:
        raise AllRoundsRejected("every boosting round exceeded the error limit")
    return EnsembleModel(members, "weighted_vote", C, alphas, seeds)


def brf_fit(ds: Dataset, n_trees: int = 100, seed=0, cfg: ForestConfig | None = None):
    """Forest whose every tree grows on its own balanced bootstrap."""
    cfg = cfg or ForestConfig(n_estimators=n_trees)
    if cfg.n_estimators != n_trees:
        cfg = ForestConfig(n_trees, cfg.max_features, cfg.max_depth, cfg.min_samples_leaf, True)

    def sampler(rng):
        return balanced_bootstrap_indices(ds.labels, rng, ds.n_classes)

    return train_forest(ds, cfg, seed, row_sampler=sampler)


def balanced_epoch_train(ds: Dataset, cfg: MlpConfig = MlpConfig(), seed=0, loss: LossSpec = LossSpec()):
    """MLP training where each epoch sees a fresh balanced bootstrap."""

    def sampler(epoch, _rng):
        return balanced_bootstrap_indices(ds.labels, rng_from(derive_seed(seed, "epoch", epoch)),
                                          ds.n_classes)

    return train_mlp(ds, cfg, loss, seed, epoch_sampler=sampler)


# ---------------------------------------------------------------- meta-learning


@dataclass
class MetaModel:
    submodels: list
    meta: object
    n_classes: int
    focus_sizes: list = field(default_factory=list)

    def meta_features(self, X) -> np.ndarray:
        return np.hstack([m.predict_proba(X) for m in self.submodels])

    def predict_proba(self, X) -> np.ndarray:
        return self.meta.predict_proba(self.meta_features(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def focused_indices(labels, c, contamination, rng) -> np.ndarray:
    own = np.flatnonzero(labels == c)
    others = np.flatnonzero(labels != c)
    k = min(max(1, int(np.floor(contamination * own.size))), others.size)
    return np.sort(np.concatenate([own, rng.choice(others, size=k, replace=False)]))


def meta_fit(ds: Dataset, contamination: float = 0.10, seed=0, forest_cfg: ForestConfig | None = None,
             logistic_cfg: LogisticConfig | None = None) -> MetaModel:
    """One forest per class on that class plus a little contamination, stacked by logistic regression."""
    counts = ds.counts
    if ds.n_classes < 2 or np.any(counts < 2):
        raise TooFewSamples("meta-learning needs >= 2 classes with >= 2 rows each")
    forest_cfg = forest_cfg or ForestConfig()
    submodels, sizes = [], []
    for c in range(ds.n_classes):
        rows = focused_indices(ds.labels, c, contamination, rng_from(derive_seed(seed, "focus", c)))
        submodels.append(train_forest(ds.subset(rows), forest_cfg, derive_seed(seed, "sub", c)))
        sizes.append(int(rows.size))
    model = MetaModel(submodels, None, ds.n_classes, sizes)
    logistic_cfg = logistic_cfg or LogisticConfig(n_classes=ds.n_classes)
    model.meta = train_logistic(model.meta_features(ds.features), ds.labels, logistic_cfg)
    return model


def meta_predict(model: MetaModel, features) -> np.ndarray:
    return model.predict(features)
