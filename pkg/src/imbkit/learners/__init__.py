"""Base learners shared by every mitigation family."""

import numpy as np

from ..errors import ShapeMismatch
from .logistic import LogisticConfig, LogisticModel, train_logistic
from .mlp import LossSpec, MlpConfig, MlpModel, focal_loss, loss_and_grads, train_mlp
from .neighbors import KMeansModel, kmeans_fit, knn_neighbors, knn_table, sq_distances
from .tree import ForestConfig, ForestModel, TreeConfig, TreeModel, train_forest, train_tree


def predict_proba(model, features) -> np.ndarray:
    """Class-probability matrix from any trained model."""
    if not hasattr(model, "predict_proba"):
        raise ShapeMismatch(f"{type(model).__name__} has no probability output")
    return model.predict_proba(features)


__all__ = [
    "ForestConfig", "ForestModel", "KMeansModel", "LogisticConfig", "LogisticModel",
    "LossSpec", "MlpConfig", "MlpModel", "TreeConfig", "TreeModel", "focal_loss",
    "kmeans_fit", "knn_neighbors", "knn_table", "loss_and_grads", "predict_proba",
    "sq_distances", "train_forest", "train_logistic", "train_mlp", "train_tree",
]
