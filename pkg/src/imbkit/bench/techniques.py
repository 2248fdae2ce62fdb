"""Technique registry: every id maps to one way of turning (train, tune) into a predictor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import Dataset, class_weights, derive_seed
from ..errors import ConfigError, TechniqueFailed
from ..inprocess import (
    bagging_fit,
    balanced_epoch_train,
    boosting_fit,
    brf_fit,
    meta_fit,
    weighted_fit,
)
from ..learners import ForestConfig, LossSpec, MlpConfig, TreeConfig, train_forest, train_mlp
from ..postprocess import (
    CostSpec,
    ThresholdRule,
    calibrate,
    cost_threshold,
    reweight_predictions,
    sample_weighting,
    tune_threshold,
    tune_thresholds_ovr,
)
from ..preprocess import ResampleSpec, resample


@dataclass(frozen=True)
class Context:
    """Per-dataset settings shared by every technique."""

    learner: str  # forest | mlp
    n_classes: int
    forest: ForestConfig = ForestConfig()
    mlp: MlpConfig = MlpConfig()
    cost_fn: float = 4.0
    cost_fp: float = 1.0


class Pipeline:
    """A trained model plus an optional probability adjustment; ``predict`` is what gets timed."""

    def __init__(self, model, adjust: Callable | None = None):
        self.model = model
        self.adjust = adjust

    def predict(self, X) -> np.ndarray:
        if self.adjust is None:
            return self.model.predict(X)
        return self.adjust(self.model.predict_proba(X))


def fit_base(ctx: Context, ds: Dataset, seed):
    if ctx.learner == "forest":
        return train_forest(ds, ctx.forest, seed)
    return train_mlp(ds, ctx.mlp, LossSpec(), seed)


@dataclass(frozen=True)
class Technique:
    family: str  # baseline | pre | in | post
    build: Callable  # (ctx, train, tune, seed, params) -> Pipeline
    params: tuple = ()
    needs_mlp: bool = False

    def check(self, params: dict):
        extra = set(params) - set(self.params)
        if extra:
            raise ConfigError(f"unexpected parameters {sorted(extra)}; allowed {list(self.params)}")


# ---------------------------------------------------------------- builders


def _baseline(ctx, train, tune, seed, params):
    return Pipeline(fit_base(ctx, train, seed))


def _pre(method, **fixed):
    def build(ctx, train, tune, seed, params):
        spec = ResampleSpec(method, **{**fixed, **params})
        data = resample(train, spec, derive_seed(seed, "resample"))
        return Pipeline(fit_base(ctx, data, derive_seed(seed, "fit")))

    return build


def _class_weights(ctx, train, tune, seed, params):
    cfg = ctx.forest if ctx.learner == "forest" else ctx.mlp
    return Pipeline(weighted_fit(ctx.learner, train, seed, cfg))


def _focal(ctx, train, tune, seed, params):
    gamma = float(params.get("gamma", 2.0))
    if params.get("weighted", False):
        return Pipeline(weighted_fit("mlp", train, seed, ctx.mlp, focal_gamma=gamma))
    return Pipeline(train_mlp(train, ctx.mlp, LossSpec("focal", gamma), seed))


def _bagging(ctx, train, tune, seed, params):
    base = "tree" if ctx.learner == "forest" else "mlp"
    cfg = TreeConfig() if base == "tree" else ctx.mlp
    return Pipeline(bagging_fit(train, base, int(params.get("n_estimators", 10)), seed, cfg))


def _boosting(ctx, train, tune, seed, params):
    depth = params.get("max_depth", 3)
    return Pipeline(boosting_fit(train, int(params.get("n_rounds", 10)), seed, TreeConfig(max_depth=depth)))


def _brf(ctx, train, tune, seed, params):
    n = int(params.get("n_trees", ctx.forest.n_estimators))
    return Pipeline(brf_fit(train, n, seed, ctx.forest))


def _balanced_epoch(ctx, train, tune, seed, params):
    return Pipeline(balanced_epoch_train(train, ctx.mlp, seed))


def _meta(ctx, train, tune, seed, params):
    return Pipeline(meta_fit(train, float(params.get("contamination", 0.1)), seed, ctx.forest))


def _threshold(ctx, train, tune, seed, params):
    model = fit_base(ctx, train, seed)
    probs = model.predict_proba(tune.features)
    delta = float(params.get("delta", 0.01))
    if ctx.n_classes == 2:
        rule = tune_threshold(probs[:, 1], tune.labels, delta)
    else:
        rule = tune_thresholds_ovr(probs, tune.labels, delta)
    return Pipeline(model, rule.apply)


def _cost(ctx, train, tune, seed, params):
    model = fit_base(ctx, train, seed)
    c_fn = params.get("c_fn", ctx.cost_fn)
    c_fp = params.get("c_fp", ctx.cost_fp)
    if ctx.n_classes == 2:
        tau = cost_threshold(CostSpec(float(c_fp), float(c_fn)))
        rule = ThresholdRule(np.array([tau]), "binary")
    else:
        C = ctx.n_classes
        rule = cost_threshold(CostSpec(np.broadcast_to(np.asarray(c_fp, float), C).copy(),
                                       np.broadcast_to(np.asarray(c_fn, float), C).copy()))
    return Pipeline(model, rule.apply)


def _reweight(ctx, train, tune, seed, params):
    model = fit_base(ctx, train, seed)
    weights = class_weights(train).weights
    scale = float(params.get("scale", 1.0))

    def adjust(probs):
        return np.argmax(reweight_predictions(probs, weights, scale), axis=1)

    return Pipeline(model, adjust)


def _calibration(ctx, train, tune, seed, params):
    model = fit_base(ctx, train, seed)
    cal = calibrate(model.predict_proba(tune.features), tune.labels)

    def adjust(probs):
        return np.argmax(cal.apply(probs), axis=1)

    return Pipeline(model, adjust)


def _sample_weighting(ctx, train, tune, seed, params):
    cfg = ctx.forest if ctx.learner == "forest" else ctx.mlp
    return Pipeline(sample_weighting(train, ctx.learner, float(params.get("factor", 2.0)), seed, cfg))


REGISTRY = {
    "baseline": Technique("baseline", _baseline),
    "ros": Technique("pre", _pre("ros"), ("target_counts",)),
    "smote": Technique("pre", _pre("smote"), ("k_neighbors", "target_counts")),
    "adasyn": Technique("pre", _pre("adasyn"), ("k_neighbors", "target_counts")),
    "rus": Technique("pre", _pre("rus", target_counts="balance-to-minority"), ("target_counts",)),
    "cluster_centroids": Technique("pre", _pre("cluster_centroids"), ("n_clusters",)),
    "smote_tomek": Technique("pre", _pre("smote_tomek"), ("k_neighbors", "target_counts")),
    "massaging": Technique("pre", _pre("massaging"), ("flip_fraction", "majority_class", "minority_class")),
    "perturbation": Technique("pre", _pre("perturbation"),
                              ("p_majority_flip", "p_minority_flip", "majority_class", "minority_class")),
    "cluster_massaging": Technique("pre", _pre("cluster_massaging"),
                                   ("n_clusters", "flip_fraction", "majority_class", "minority_class")),
    "cvae": Technique("pre", _pre("cvae"), ("target_counts", "cvae")),
    "class_weights": Technique("in", _class_weights),
    "focal_loss": Technique("in", _focal, ("gamma", "weighted"), needs_mlp=True),
    "bagging": Technique("in", _bagging, ("n_estimators",)),
    "boosting": Technique("in", _boosting, ("n_rounds", "max_depth")),
    "brf": Technique("in", _brf, ("n_trees",)),
    "balanced_epoch": Technique("in", _balanced_epoch, needs_mlp=True),
    "meta_learning": Technique("in", _meta, ("contamination",)),
    "threshold_adjustment": Technique("post", _threshold, ("delta",)),
    "cost_sensitive": Technique("post", _cost, ("c_fn", "c_fp")),
    "reweighting": Technique("post", _reweight, ("scale",)),
    "calibration": Technique("post", _calibration),
    "sample_weighting": Technique("post", _sample_weighting, ("factor",)),
}


def build_pipeline(kind: str, params: dict, ctx: Context, train: Dataset, tune: Dataset, seed) -> Pipeline:
    """Train one cell; any toolkit error becomes ``TechniqueFailed`` carrying its class name."""
    tech = REGISTRY[kind]
    if tech.needs_mlp and ctx.learner != "mlp":
        raise TechniqueFailed("NotApplicable", f"{kind} needs the mlp learner")
    try:
        return tech.build(ctx, train, tune, seed, params)
    except TechniqueFailed:
        raise
    except (ValueError, ArithmeticError) as exc:
        raise TechniqueFailed(type(exc).__name__, str(exc)) from exc
