import numpy as np

from imbkit.core import Dataset


def blobs(counts, centers, spread=1.0, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(c, spread, size=(n, len(c))) for n, c in zip(counts, centers)])
    y = np.concatenate([np.full(n, i) for i, n in enumerate(counts)])
    return Dataset(X, y, len(counts))


ACCEPTANCE = []  # (criterion, passed, detail) lines printed at the end of the session


def report(criterion, passed, detail):
    ACCEPTANCE.append((criterion, bool(passed), detail))
    return bool(passed)
