"""Data-centric mitigation: resampling, cleaning, label flipping and CVAE synthesis."""

from ..core import Dataset
from .cvae import CvaeConfig, CvaeModel, cvae_fit, cvae_oversample, cvae_sample
from .flipping import cluster_massaging, massaging, massaging_scores, perturbation
from .sampling import (
    TomekPair,
    adasyn,
    adasyn_hardness,
    cluster_centroids,
    find_tomek_links,
    largest_remainder,
    remove_tomek_majority,
    ros,
    rus,
    smote,
    smote_tomek,
    standardized,
)
from .spec import METHODS, ResampleSpec, resolve_targets


def resample(ds: Dataset, spec: ResampleSpec, seed=0) -> Dataset:
    """Apply the technique named by ``spec.method``."""
    method = spec.method
    if method == "ros":
        return ros(ds, spec, seed)
    if method == "smote":
        return smote(ds, spec, seed)
    if method == "adasyn":
        return adasyn(ds, spec, seed)
    if method == "rus":
        return rus(ds, spec, seed)
    if method == "cluster_centroids":
        return cluster_centroids(ds, spec, seed)
    if method == "smote_tomek":
        return smote_tomek(ds, spec, seed)
    if method == "massaging":
        return massaging(ds, spec.flip_fraction, seed, spec.majority_class, spec.minority_class)
    if method == "perturbation":
        return perturbation(ds, spec.p_majority_flip, spec.p_minority_flip, seed,
                            spec.majority_class, spec.minority_class)
    if method == "cluster_massaging":
        return cluster_massaging(ds, spec.n_clusters or 5, spec.flip_fraction, seed,
                                 spec.majority_class, spec.minority_class)
    return cvae_oversample(ds, spec, seed)


__all__ = [
    "CvaeConfig", "CvaeModel", "METHODS", "ResampleSpec", "TomekPair", "adasyn",
    "adasyn_hardness", "cluster_centroids", "cluster_massaging", "cvae_fit", "cvae_oversample",
    "cvae_sample", "find_tomek_links", "largest_remainder", "massaging", "massaging_scores",
    "perturbation", "remove_tomek_majority", "resample", "resolve_targets", "ros", "rus",
    "smote", "smote_tomek", "standardized",
]
