"""Multinomial logistic regression by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch, SingleClass


@dataclass(frozen=True)
class LogisticConfig:
    l2: float = 1e-3
    max_iter: int = 2000
    tol: float = 1e-9
    n_classes: int | None = None


@dataclass
class LogisticModel:
    weights: np.ndarray  # [C, n_features]
    bias: np.ndarray
    loss_history: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected {self.n_features} columns, got {X.shape}")
        return _softmax(X @ self.weights.T + self.bias)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def _softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def _objective(X, Y, W, b, l2):
    P = _softmax(X @ W.T + b)
    ce = -np.sum(Y * np.log(np.clip(P, 1e-300, None))) / X.shape[0]
    return ce + 0.5 * l2 * (np.sum(W * W) + np.sum(b * b)), P


def train_logistic(features, labels, cfg: LogisticConfig = LogisticConfig()) -> LogisticModel:
    """Gradient descent on mean cross-entropy plus ``l2/2 * ||[W, b]||^2``.

    The step is ``1/L`` with L an upper bound on the gradient's Lipschitz
    constant, so the objective never increases. The intercept is penalised
    too; as ``l2`` grows every output tends to ``1/C``.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    C = cfg.n_classes or int(y.max()) + 1
    if np.unique(y).size < 2:
        raise SingleClass("logistic regression needs at least two classes")
    n, d = X.shape
    Y = np.zeros((n, C))
    Y[np.arange(n), y] = 1.0
    lipschitz = 0.5 * float(np.max(np.sum(X * X, axis=1) + 1.0)) + cfg.l2
    step = 1.0 / lipschitz
    W = np.zeros((C, d))
    b = np.zeros(C)
    obj, P = _objective(X, Y, W, b, cfg.l2)
    history = [obj]
    for _ in range(cfg.max_iter):
        G = (P - Y) / n
        W -= step * (G.T @ X + cfg.l2 * W)
        b -= step * (G.sum(axis=0) + cfg.l2 * b)
        new_obj, P = _objective(X, Y, W, b, cfg.l2)
        history.append(new_obj)
        if obj - new_obj < cfg.tol * max(1.0, abs(obj)):
            break
        obj = new_obj
    return LogisticModel(W, b, history)
