"""Two-hidden-layer ReLU/SoftMax network trained with Adam, plus focal-family losses."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from ..core import Dataset, derive_seed, rng_from
from ..errors import DivergedLoss, NonFiniteProb, ShapeMismatch

PROB_CLAMP = 1e-12
LOSS_KINDS = ("cross_entropy", "weighted_ce", "focal", "weighted_focal")


@dataclass(frozen=True)
class LossSpec:
    kind: str = "cross_entropy"
    gamma: float = 0.0
    alpha: tuple | None = None  # per-class weights; None means all ones

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.alpha is not None and any(a <= 0 for a in self.alpha):
            raise ValueError("alpha entries must be positive")

    def resolved(self, n_classes):
        """(alpha vector, gamma) actually used by the kernels."""
        uses_alpha = self.kind in ("weighted_ce", "weighted_focal")
        uses_gamma = self.kind in ("focal", "weighted_focal")
        alpha = np.ones(n_classes)
        if uses_alpha and self.alpha is not None:
            alpha = np.asarray(self.alpha, dtype=np.float64)
            if alpha.shape != (n_classes,):
                raise ShapeMismatch(f"alpha has {alpha.size} entries for {n_classes} classes")
        return alpha, (float(self.gamma) if uses_gamma else 0.0)


def focal_loss(y_true_onehot, probs, gamma=2.0, alpha=1.0) -> float:
    """Mean of ``-alpha_c (1 - p_c)^gamma ln p_c`` over samples, c the true class.

    ``alpha`` is a scalar or a per-class vector. Probabilities are clamped to
    ``[1e-12, 1 - 1e-12]`` before the log.
    """
    Y = np.atleast_2d(np.asarray(y_true_onehot, dtype=np.float64))
    P = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    if Y.shape != P.shape:
        raise ShapeMismatch(f"{Y.shape} vs {P.shape}")
    if not np.all(np.isfinite(P)):
        raise NonFiniteProb("probabilities contain NaN or inf")
    P = np.clip(P, PROB_CLAMP, 1.0 - PROB_CLAMP)
    a = np.broadcast_to(np.asarray(alpha, dtype=np.float64), (P.shape[1],))
    per = -(Y * a * (1.0 - P) ** gamma * np.log(P)).sum(axis=1)
    return float(per.mean())


@dataclass(frozen=True)
class MlpConfig:
    hidden: tuple = (20, 10)
    lr: float = 1e-4
    batch_size: int = 8
    epochs: int = 200
    patience: int = 20
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    standardize: bool = True


@dataclass
class MlpModel:
    params: list  # [W1, b1, W2, b2, W3, b3]
    mean: np.ndarray
    scale: np.ndarray
    loss: LossSpec
    cfg: MlpConfig
    loss_history: list = field(default_factory=list)
    epoch_sizes: list = field(default_factory=list)

    @property
    def layer_sizes(self):
        W1, _, W2, _, W3, _ = self.params
        return [W1.shape[0], W1.shape[1], W2.shape[1], W3.shape[1]]

    @property
    def n_classes(self) -> int:
        return self.params[4].shape[1]

    @property
    def n_features(self) -> int:
        return self.params[0].shape[0]

    def predict_proba(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected {self.n_features} columns, got {X.shape}")
        return _forward_all((X - self.mean) / self.scale, *self.params)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


# ---------------------------------------------------------------- kernels


@numba.njit(cache=True)
def _softmax_rows(Z):
    out = np.empty_like(Z)
    for i in range(Z.shape[0]):
        m = Z[i].max()
        s = 0.0
        for j in range(Z.shape[1]):
            out[i, j] = np.exp(Z[i, j] - m)
            s += out[i, j]
        for j in range(Z.shape[1]):
            out[i, j] /= s
    return out


@numba.njit(cache=True)
def _forward_all(X, W1, b1, W2, b2, W3, b3):
    H1 = np.maximum(X @ W1 + b1, 0.0)
    H2 = np.maximum(H1 @ W2 + b2, 0.0)
    return _softmax_rows(H2 @ W3 + b3)


@numba.njit(cache=True)
def _loss_grads(X, y, sw, alpha, gamma, W1, b1, W2, b2, W3, b3,
                gW1, gb1, gW2, gb2, gW3, gb3):
    """Batch loss (mean of weighted per-sample focal terms) and parameter gradients."""
    n = X.shape[0]
    A1 = X @ W1 + b1
    H1 = np.maximum(A1, 0.0)
    A2 = H1 @ W2 + b2
    H2 = np.maximum(A2, 0.0)
    P = _softmax_rows(H2 @ W3 + b3)
    G = P.copy()
    loss = 0.0
    lo = 1e-12
    hi = 1.0 - 1e-12
    for i in range(n):
        c = y[i]
        p = min(max(P[i, c], lo), hi)
        q = 1.0 - p
        a = alpha[c] * sw[i]
        lp = np.log(p)
        if gamma == 0.0:
            mod = 1.0
            g = -a
        else:
            mod = q ** gamma
            g = -a * (mod - gamma * p * q ** (gamma - 1.0) * lp)
        loss += -a * mod * lp
        # dL/dz_j = g * (delta_cj - p_j)
        for j in range(P.shape[1]):
            G[i, j] = -g * P[i, j]
        G[i, c] += g
    loss /= n
    G /= n
    gW3[:, :] = H2.T @ G
    gb3[:] = G.sum(axis=0)
    D2 = G @ W3.T
    for i in range(n):
        for j in range(D2.shape[1]):
            if A2[i, j] <= 0.0:
                D2[i, j] = 0.0
    gW2[:, :] = H1.T @ D2
    gb2[:] = D2.sum(axis=0)
    D1 = D2 @ W2.T
    for i in range(n):
        for j in range(D1.shape[1]):
            if A1[i, j] <= 0.0:
                D1[i, j] = 0.0
    gW1[:, :] = X.T @ D1
    gb1[:] = D1.sum(axis=0)
    return loss


@numba.njit(cache=True)
def _adam(p, g, m, v, lr, b1, b2, eps, t):
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    fp = p.reshape(-1)
    fg = g.reshape(-1)
    fm = m.reshape(-1)
    fv = v.reshape(-1)
    for i in range(fp.size):
        fm[i] = b1 * fm[i] + (1.0 - b1) * fg[i]
        fv[i] = b2 * fv[i] + (1.0 - b2) * fg[i] * fg[i]
        fp[i] -= lr * (fm[i] / c1) / (np.sqrt(fv[i] / c2) + eps)


@numba.njit(cache=True)
def _run_epoch(X, y, sw, order, batch, alpha, gamma, lr, b1, b2, eps, step,
               W1, b1v, W2, b2v, W3, b3v,
               mW1, mb1, mW2, mb2, mW3, mb3, vW1, vb1, vW2, vb2, vW3, vb3):
    gW1 = np.zeros_like(W1)
    gb1 = np.zeros_like(b1v)
    gW2 = np.zeros_like(W2)
    gb2 = np.zeros_like(b2v)
    gW3 = np.zeros_like(W3)
    gb3 = np.zeros_like(b3v)
    total = 0.0
    n = order.size
    for s in range(0, n, batch):
        e = min(s + batch, n)
        rows = order[s:e]
        Xb = X[rows]
        yb = y[rows]
        wb = sw[rows]
        loss = _loss_grads(Xb, yb, wb, alpha, gamma, W1, b1v, W2, b2v, W3, b3v,
                           gW1, gb1, gW2, gb2, gW3, gb3)
        if not np.isfinite(loss):
            return np.nan, step
        total += loss * (e - s)
        step += 1
        _adam(W1, gW1, mW1, vW1, lr, b1, b2, eps, step)
        _adam(b1v, gb1, mb1, vb1, lr, b1, b2, eps, step)
        _adam(W2, gW2, mW2, vW2, lr, b1, b2, eps, step)
        _adam(b2v, gb2, mb2, vb2, lr, b1, b2, eps, step)
        _adam(W3, gW3, mW3, vW3, lr, b1, b2, eps, step)
        _adam(b3v, gb3, mb3, vb3, lr, b1, b2, eps, step)
    return total / n, step


# ---------------------------------------------------------------- python surface


def init_params(sizes, rng):
    """Glorot-uniform weights, zero biases."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def loss_and_grads(params, X, y, loss: LossSpec, n_classes, sample_weights=None):
    """Batch loss and analytic gradients w.r.t. ``params`` (same order)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    sw = np.ones(X.shape[0]) if sample_weights is None else np.asarray(sample_weights, float)
    alpha, gamma = loss.resolved(n_classes)
    grads = [np.zeros_like(p) for p in params]
    value = _loss_grads(X, y, sw, alpha, gamma, *params, *grads)
    return value, grads


def train_mlp(ds: Dataset, cfg: MlpConfig = MlpConfig(), loss: LossSpec = LossSpec(), seed=0,
              epoch_sampler=None, sample_weights=None) -> MlpModel:
    """Mini-batch Adam training of a [d, h1, h2, C] ReLU network.

    ``epoch_sampler(epoch, rng) -> row indices`` substitutes each epoch's
    training rows; the default is every row. Rows are shuffled per epoch.
    Training stops early after ``cfg.patience`` epochs without a new best
    epoch loss.
    """
    X = ds.features
    if X.shape[1] < 1:
        raise ShapeMismatch("dataset has no feature columns")
    if len(cfg.hidden) != 2:
        raise ShapeMismatch("the network has exactly two hidden layers")
    n_classes = ds.n_classes
    if cfg.standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
    else:
        mean, scale = np.zeros(X.shape[1]), np.ones(X.shape[1])
    Xs = np.ascontiguousarray((X - mean) / scale)
    y = np.ascontiguousarray(ds.labels, dtype=np.int64)
    sw = np.ones(ds.n_samples) if sample_weights is None else np.asarray(sample_weights, float)
    if sw.shape != (ds.n_samples,):
        raise ShapeMismatch("sample_weights must have one entry per row")
    alpha, gamma = loss.resolved(n_classes)

    sizes = [X.shape[1], cfg.hidden[0], cfg.hidden[1], n_classes]
    params = init_params(sizes, rng_from(derive_seed(seed, "init")))
    m_state = [np.zeros_like(p) for p in params]
    v_state = [np.zeros_like(p) for p in params]
    shuffle_rng = rng_from(derive_seed(seed, "shuffle"))
    sampler_rng = rng_from(derive_seed(seed, "epochs"))

    history, sizes_seen = [], []
    best, stale, step = np.inf, 0, 0
    for epoch in range(cfg.epochs):
        rows = np.arange(ds.n_samples) if epoch_sampler is None else np.asarray(
            epoch_sampler(epoch, sampler_rng), dtype=np.int64)
        order = np.ascontiguousarray(shuffle_rng.permutation(rows))
        epoch_loss, step = _run_epoch(Xs, y, sw, order, cfg.batch_size, alpha, gamma, cfg.lr,
                                      cfg.beta1, cfg.beta2, cfg.eps, step, *params,
                                      *m_state, *v_state)
        if not np.isfinite(epoch_loss):
            raise DivergedLoss(f"non-finite loss at epoch {epoch}")
        history.append(float(epoch_loss))
        sizes_seen.append(int(order.size))
        if epoch_loss < best - 1e-12:
            best, stale = epoch_loss, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    return MlpModel(params, mean, scale, loss, cfg, history, sizes_seen)
