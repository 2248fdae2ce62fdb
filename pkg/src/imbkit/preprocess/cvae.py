"""Small conditional VAE used to synthesise rows for a requested class."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Dataset, derive_seed, rng_from
from ..errors import DivergedLoss, UnknownClass
from .spec import ResampleSpec, resolve_targets


@dataclass(frozen=True)
class CvaeConfig:
    latent_dim: int = 4
    hidden: tuple = (16,)
    epochs: int = 200
    lr: float = 1e-3
    beta: float = 1.0
    batch_size: int = 64


@dataclass
class CvaeModel:
    params: dict
    n_classes: int
    class_mean: np.ndarray  # [C, d]; features are standardized per class
    class_scale: np.ndarray
    present: np.ndarray
    cfg: CvaeConfig
    loss_history: list = field(default_factory=list)
    kl_history: list = field(default_factory=list)

    def decode(self, z, c) -> np.ndarray:
        onehot = np.zeros((z.shape[0], self.n_classes))
        onehot[:, c] = 1.0
        out, _ = _decode(self.params, z, onehot)
        return out * self.class_scale[c] + self.class_mean[c]


def _relu(a):
    return np.maximum(a, 0.0)


def _dense_init(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out)), np.zeros(fan_out)


def init_params(d, n_classes, cfg: CvaeConfig, rng) -> dict:
    h = cfg.hidden[0]
    L = cfg.latent_dim
    p = {}
    p["We"], p["be"] = _dense_init(rng, d + n_classes, h)
    p["Wmu"], p["bmu"] = _dense_init(rng, h, L)
    p["Wlv"], p["blv"] = _dense_init(rng, h, L)
    p["Wd"], p["bd"] = _dense_init(rng, L + n_classes, h)
    p["Wo"], p["bo"] = _dense_init(rng, h, d)
    return p


def _decode(p, z, onehot):
    zc = np.hstack([z, onehot])
    a = zc @ p["Wd"] + p["bd"]
    h = _relu(a)
    return h @ p["Wo"] + p["bo"], (zc, a, h)


def loss_and_grads(p, X, onehot, eps, beta):
    """Mean over rows of squared reconstruction error plus beta * KL(q || N(0, I)).

    ``eps`` is the standard-normal draw of the reparameterisation. Returns
    (loss, mean KL, grads).
    """
    n = X.shape[0]
    xc = np.hstack([X, onehot])
    a1 = xc @ p["We"] + p["be"]
    h1 = _relu(a1)
    mu = h1 @ p["Wmu"] + p["bmu"]
    lv = h1 @ p["Wlv"] + p["blv"]
    std = np.exp(0.5 * lv)
    z = mu + std * eps
    xhat, (zc, a2, h2) = _decode(p, z, onehot)
    diff = xhat - X
    rec = (diff ** 2).sum(axis=1)
    kl = -0.5 * (1.0 + lv - mu ** 2 - np.exp(lv)).sum(axis=1)
    loss = float((rec + beta * kl).mean())

    g = {}
    dxhat = 2.0 * diff / n
    g["Wo"] = h2.T @ dxhat
    g["bo"] = dxhat.sum(axis=0)
    da2 = (dxhat @ p["Wo"].T) * (a2 > 0)
    g["Wd"] = zc.T @ da2
    g["bd"] = da2.sum(axis=0)
    dz = (da2 @ p["Wd"].T)[:, : z.shape[1]]
    dmu = dz + beta * mu / n
    dlv = dz * eps * 0.5 * std + beta * 0.5 * (np.exp(lv) - 1.0) / n
    g["Wmu"] = h1.T @ dmu
    g["bmu"] = dmu.sum(axis=0)
    g["Wlv"] = h1.T @ dlv
    g["blv"] = dlv.sum(axis=0)
    da1 = (dmu @ p["Wmu"].T + dlv @ p["Wlv"].T) * (a1 > 0)
    g["We"] = xc.T @ da1
    g["be"] = da1.sum(axis=0)
    return loss, float(kl.mean()), g


def cvae_fit(ds: Dataset, cfg: CvaeConfig = CvaeConfig(), seed=0) -> CvaeModel:
    """Train with Adam on reparameterised mini-batches.

    Rows are standardized with their own class's mean and spread, so the
    network models within-class shape and the class id carries location.
    """
    C, d = ds.n_classes, ds.n_features
    counts = ds.counts
    mean = np.zeros((C, d))
    scale = np.ones((C, d))
    for c in np.flatnonzero(counts):
        Xc = ds.features[ds.labels == c]
        mean[c] = Xc.mean(axis=0)
        s = Xc.std(axis=0)
        scale[c] = np.where(s > 0, s, 1.0)
    X = (ds.features - mean[ds.labels]) / scale[ds.labels]
    onehot = np.eye(C)[ds.labels]

    rng = rng_from(seed)
    p = init_params(d, C, cfg, rng_from(derive_seed(seed, "init")))
    m = {k: np.zeros_like(v) for k, v in p.items()}
    v = {k: np.zeros_like(v) for k, v in p.items()}
    b1, b2, adam_eps = 0.9, 0.999, 1e-8
    t = 0
    losses, kls = [], []
    n = ds.n_samples
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            rows = order[s:s + cfg.batch_size]
            eps = rng.standard_normal((rows.size, cfg.latent_dim))
            loss, kl, g = loss_and_grads(p, X[rows], onehot[rows], eps, cfg.beta)
            if not np.isfinite(loss):
                raise DivergedLoss("CVAE loss became non-finite")
            kls.append(kl)
            total += loss * rows.size
            t += 1
            for k in p:
                m[k] = b1 * m[k] + (1 - b1) * g[k]
                v[k] = b2 * v[k] + (1 - b2) * g[k] ** 2
                p[k] -= cfg.lr * (m[k] / (1 - b1 ** t)) / (np.sqrt(v[k] / (1 - b2 ** t)) + adam_eps)
        losses.append(total / n)
    return CvaeModel(p, C, mean, scale, counts > 0, cfg, losses, kls)


def cvae_sample(model: CvaeModel, c: int, n: int, seed=0) -> Dataset:
    """Decode ``n`` prior draws conditioned on class ``c``."""
    if not (0 <= c < model.n_classes) or not model.present[c]:
        raise UnknownClass(f"class {c} was not seen during training")
    d = model.class_mean.shape[1]
    if n == 0:
        return Dataset(np.empty((0, d)), np.empty(0, dtype=np.int64), model.n_classes)
    z = rng_from(seed).standard_normal((n, model.cfg.latent_dim))
    return Dataset(model.decode(z, c), np.full(n, c), model.n_classes)


def cvae_oversample(ds: Dataset, spec: ResampleSpec = ResampleSpec("cvae"), seed=0) -> Dataset:
    cfg = CvaeConfig(**spec.cvae)
    targets = resolve_targets(ds, spec.target_counts)
    model = cvae_fit(ds, cfg, seed=derive_seed(seed, "fit"))
    parts_X, parts_y = [ds.features], [ds.labels]
    for c, (have, want) in enumerate(zip(ds.counts, targets)):
        if want > have:
            synth = cvae_sample(model, c, int(want - have), seed=derive_seed(seed, "sample", c))
            parts_X.append(synth.features)
            parts_y.append(synth.labels)
    return Dataset(np.vstack(parts_X), np.concatenate(parts_y), ds.n_classes)
