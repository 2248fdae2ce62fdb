"""Technique x dataset x repetition matrix with paired splits and per-cell failure capture."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..core import Dataset, confusion_and_metrics, derive_seed, f1_binary, stratified_indices, vmr
from ..datagen import CsvSchema, generate, load_csv, load_spec, preset
from ..errors import ConfigError, TechniqueFailed
from ..learners import ForestConfig, LossSpec, MlpConfig, train_forest, train_mlp
from .config import BenchConfig, DatasetEntry, TechniqueEntry
from .techniques import Context, build_pipeline


@dataclass
class BenchRow:
    dataset: str
    technique: str
    mean_f1: float | None
    vmr: float | None
    train_ms: float | None  # median over repetitions
    infer_ms_per_1k: float | None  # median over repetitions
    improvement_pct: float | None
    reps: int
    status: str
    train_ms_mean: float | None = None
    infer_ms_per_1k_mean: float | None = None
    scores: tuple = field(default=(), repr=False)  # per-repetition F1, in repetition order


@dataclass
class CellResult:
    dataset: str
    technique: str
    scores: list
    train_ms: list
    infer_ms: list
    errors: list  # error id per failed repetition


def load_dataset(entry: DatasetEntry, seed: int) -> Dataset:
    try:
        if entry.preset:
            return generate(preset(entry.preset, seed=seed))
        if entry.spec:
            return generate(load_spec(entry.spec))
        schema = CsvSchema(entry.feature_columns, entry.label_column, entry.label_mapping)
        return load_csv(entry.csv, schema).dataset
    except OSError as exc:
        raise ConfigError(f"dataset {entry.id}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"dataset {entry.id}: {type(exc).__name__}: {exc}") from exc


def make_context(cfg: BenchConfig, entry: DatasetEntry, ds: Dataset) -> Context:
    learner = entry.learner or ("forest" if ds.n_classes == 2 else "mlp")
    try:
        forest = ForestConfig(**cfg.forest)
        mlp = MlpConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in cfg.mlp.items()})
    except TypeError as exc:
        raise ConfigError(f"bad learner overrides: {exc}") from exc
    return Context(learner, ds.n_classes, forest, mlp, cfg.cost_fn, cfg.cost_fp)


def rep_splits(ds: Dataset, cfg: BenchConfig, dataset_id: str, r: int):
    """(train, tune, test) index arrays for repetition ``r``; shared by every technique."""
    rest, test = stratified_indices(ds.labels, cfg.test_fraction,
                                    derive_seed(cfg.seed, dataset_id, "split", r), ds.n_classes)
    tune_share = cfg.tuning_fraction / (1.0 - cfg.test_fraction)
    tr, tu = stratified_indices(ds.labels[rest], tune_share,
                                derive_seed(cfg.seed, dataset_id, "tune", r), ds.n_classes)
    return rest[tr], rest[tu], test


def score(y_true, y_pred, n_classes: int, averaging: str) -> float:
    if averaging == "binary" or (averaging == "auto" and n_classes == 2):
        return f1_binary(y_true, y_pred)
    return confusion_and_metrics(y_true, y_pred, n_classes)[1].macro_f1


_WARM = False


def warm_up():
    """Load the compiled kernels once per process so the first timed cell is not penalised."""
    global _WARM
    if _WARM:
        return
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 2))
    y = (X[:, 0] > 0).astype(np.int64)
    ds = Dataset(X, y, 2)
    train_forest(ds, ForestConfig(n_estimators=2), 0).predict_proba(X)
    train_mlp(ds, MlpConfig(epochs=1), LossSpec(), 0).predict_proba(X)
    _WARM = True


def run_cell(cfg: BenchConfig, entry: DatasetEntry, tech: TechniqueEntry, ds: Dataset, ctx: Context) -> CellResult:
    cell = CellResult(entry.id, tech.id, [], [], [], [])
    timed = cfg.timing == "wall"
    if timed:
        warm_up()
    for r in range(cfg.repetitions):
        tr, tu, te = rep_splits(ds, cfg, entry.id, r)
        train, tune, test = ds.subset(tr), ds.subset(tu), ds.subset(te)
        seed = derive_seed(cfg.seed, entry.id, tech.id, r)
        try:
            t0 = time.perf_counter()
            pipe = build_pipeline(tech.kind, tech.params, ctx, train, tune, seed)
            t1 = time.perf_counter()
            pred = pipe.predict(test.features)
            t2 = time.perf_counter()
        except TechniqueFailed as exc:
            cell.errors.append(exc.error_id)
            continue
        cell.scores.append(score(test.labels, pred, ds.n_classes, cfg.averaging))
        cell.train_ms.append((t1 - t0) * 1e3 if timed else 0.0)
        cell.infer_ms.append((t2 - t1) * 1e3 * 1000.0 / test.n_samples if timed else 0.0)
    return cell


def _status(cell: CellResult, reps: int) -> str:
    if not cell.errors:
        return "ok"
    first = cell.errors[0]
    if not cell.scores:
        return f"n/a: {first}"
    return f"partial: {first} {len(cell.errors)}/{reps}"


def aggregate(cells, cfg: BenchConfig) -> list:
    rows = []
    base = {c.dataset: float(np.mean(c.scores)) for c in cells if c.technique == "baseline" and c.scores}
    for cell in cells:
        status = _status(cell, cfg.repetitions)
        if not cell.scores:
            rows.append(BenchRow(cell.dataset, cell.technique, None, None, None, None, None, 0, status))
            continue
        scores = np.asarray(cell.scores)
        mean = float(scores.mean())
        spread = float(vmr(scores)) if scores.size >= 2 and mean > 0 else None
        if cell.technique == "baseline":
            improvement = 0.0
        elif base.get(cell.dataset):
            improvement = 100.0 * (mean - base[cell.dataset]) / base[cell.dataset]
        else:
            improvement = None
        rows.append(BenchRow(
            cell.dataset, cell.technique, mean, spread,
            float(np.median(cell.train_ms)), float(np.median(cell.infer_ms)), improvement,
            int(scores.size), status,
            float(np.mean(cell.train_ms)), float(np.mean(cell.infer_ms)), tuple(cell.scores),
        ))
    rows.sort(key=lambda r: (r.dataset, r.technique))
    return rows


def _worker(args):
    return run_cell(*args)


def resolve_workers(parallel: int | None) -> int:
    env = os.environ.get("BENCH_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"BENCH_THREADS must be an integer, got {env!r}") from None
    else:
        value = parallel or 1
    if value < 1:
        raise ConfigError("worker count must be >= 1")
    return value


def run_benchmark(cfg: BenchConfig, parallel: int | None = 1) -> list:
    """Run every (dataset, technique) cell and return rows sorted by (dataset, technique)."""
    workers = resolve_workers(parallel)
    jobs = []
    for entry in cfg.datasets:
        ds = load_dataset(entry, cfg.seed)
        ctx = make_context(cfg, entry, ds)
        for tech in cfg.techniques:
            jobs.append((cfg, entry, tech, ds, ctx))
    if workers == 1:
        cells = [_worker(j) for j in jobs]
    else:
        # one cell per worker at a time; results come back in submission order
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_worker, jobs))
    return aggregate(cells, cfg)


def with_overrides(cfg: BenchConfig, reps=None, seed=None, out=None) -> BenchConfig:
    changes = {}
    if reps is not None:
        changes["repetitions"] = int(reps)
    if seed is not None:
        changes["seed"] = int(seed)
    if out is not None:
        changes["out_dir"] = str(out)
    return replace(cfg, **changes) if changes else cfg


def all_failed(rows) -> bool:
    return all(r.status.startswith("n/a") for r in rows)
