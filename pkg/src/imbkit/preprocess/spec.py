"""Declarative description of a resampling technique."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Dataset
from ..errors import ImbalanceError

METHODS = (
    "ros", "smote", "adasyn", "rus", "cluster_centroids", "smote_tomek",
    "massaging", "perturbation", "cluster_massaging", "cvae",
)


@dataclass(frozen=True)
class ResampleSpec:
    method: str = "ros"
    k_neighbors: int = 5
    # dict class -> count, "balance-to-majority" or "balance-to-minority"
    target_counts: object = "balance-to-majority"
    p_majority_flip: float = 0.1
    p_minority_flip: float = 0.01
    flip_fraction: float = 0.20
    n_clusters: int | None = None
    # label-flipping pair; None picks the largest / smallest class
    majority_class: int | None = None
    minority_class: int | None = None
    cvae: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ImbalanceError(f"unknown resampling method {self.method!r}")
        if self.k_neighbors < 1:
            raise ImbalanceError("k_neighbors must be >= 1")
        for name in ("p_majority_flip", "p_minority_flip", "flip_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ImbalanceError(f"{name} must lie in [0, 1], got {value}")


def resolve_targets(ds: Dataset, target_counts) -> np.ndarray:
    counts = ds.counts
    if isinstance(target_counts, str):
        present = counts[counts > 0]
        if target_counts == "balance-to-majority":
            level = present.max()
        elif target_counts == "balance-to-minority":
            level = present.min()
        else:
            raise ImbalanceError(f"unknown target {target_counts!r}")
        return np.where(counts > 0, level, 0).astype(np.int64)
    out = counts.copy()
    for c, n in dict(target_counts).items():
        out[int(c)] = int(n)
    return out

