"""JSON benchmark configuration (schema in docs/config_schema.md)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..datagen import PRESETS
from ..errors import ConfigError
from ..learners import ForestConfig, MlpConfig
from .techniques import REGISTRY

AVERAGING = ("auto", "binary", "macro")
TIMING = ("wall", "off")
LEARNERS = ("forest", "mlp")


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    preset: str | None = None
    spec: str | None = None  # path to a GenSpec JSON
    csv: str | None = None
    feature_columns: tuple = ("BER", "OSNR")
    label_column: str = "label"
    label_mapping: dict = field(default_factory=dict)
    learner: str | None = None  # None: forest for 2 classes, mlp otherwise


@dataclass(frozen=True)
class TechniqueEntry:
    id: str  # name shown in reports; unique
    kind: str  # registry key
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BenchConfig:
    datasets: tuple
    techniques: tuple
    repetitions: int = 100
    test_fraction: float = 0.2
    tuning_fraction: float = 0.2
    seed: int = 0
    out_dir: str = "bench_out"
    averaging: str = "auto"
    timing: str = "wall"
    forest: dict = field(default_factory=dict)  # ForestConfig overrides for the baseline forest
    mlp: dict = field(default_factory=dict)  # MlpConfig overrides
    cost_fn: float = 4.0
    cost_fp: float = 1.0

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        for name in ("test_fraction", "tuning_fraction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {value}")
        if self.test_fraction + self.tuning_fraction >= 1.0:
            raise ConfigError("test_fraction + tuning_fraction must be < 1")
        if self.averaging not in AVERAGING:
            raise ConfigError(f"averaging must be one of {AVERAGING}")
        if self.timing not in TIMING:
            raise ConfigError(f"timing must be one of {TIMING}")
        if not self.datasets:
            raise ConfigError("no datasets configured")
        ids = [d.id for d in self.datasets]
        if len(set(ids)) != len(ids):
            raise ConfigError("dataset ids must be unique")
        tids = [t.id for t in self.techniques]
        if len(set(tids)) != len(tids):
            raise ConfigError("technique ids must be unique")
        if self.cost_fn < 0 or self.cost_fp < 0 or self.cost_fn + self.cost_fp <= 0:
            raise ConfigError("costs must be non-negative with a positive sum")
        try:
            ForestConfig(**self.forest)
            MlpConfig(**self.mlp)
        except TypeError as exc:
            raise ConfigError(f"bad learner overrides: {exc}") from exc


def _dataset(entry) -> DatasetEntry:
    if isinstance(entry, str):
        if entry not in PRESETS:
            raise ConfigError(f"unknown dataset preset {entry!r}; choose from {sorted(PRESETS)}")
        return DatasetEntry(id=entry, preset=entry)
    if not isinstance(entry, dict):
        raise ConfigError(f"dataset entry must be a string or object, got {entry!r}")
    sources = [k for k in ("preset", "spec", "csv") if entry.get(k)]
    if len(sources) != 1:
        raise ConfigError(f"dataset {entry!r} needs exactly one of preset / spec / csv")
    if entry.get("preset") and entry["preset"] not in PRESETS:
        raise ConfigError(f"unknown dataset preset {entry['preset']!r}")
    learner = entry.get("learner")
    if learner is not None and learner not in LEARNERS:
        raise ConfigError(f"learner must be one of {LEARNERS}")
    known = {"id", "preset", "spec", "csv", "feature_columns", "label_column", "label_mapping", "learner"}
    extra = set(entry) - known
    if extra:
        raise ConfigError(f"unknown dataset keys {sorted(extra)}")
    return DatasetEntry(
        id=str(entry.get("id") or entry.get(sources[0])),
        preset=entry.get("preset"),
        spec=entry.get("spec"),
        csv=entry.get("csv"),
        feature_columns=tuple(entry.get("feature_columns", ("BER", "OSNR"))),
        label_column=entry.get("label_column", "label"),
        label_mapping={str(k): int(v) for k, v in entry.get("label_mapping", {}).items()},
        learner=learner,
    )


def _technique(entry) -> TechniqueEntry:
    if isinstance(entry, str):
        entry = {"kind": entry}
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError(f"technique entry needs a 'kind': {entry!r}")
    kind = entry["kind"]
    if kind not in REGISTRY:
        raise ConfigError(f"unknown technique {kind!r}; choose from {sorted(REGISTRY)}")
    params = dict(entry.get("params", {}))
    REGISTRY[kind].check(params)
    return TechniqueEntry(str(entry.get("id", kind)), kind, params)


def from_dict(d: dict, base_dir=".") -> BenchConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    known = {"datasets", "techniques", "repetitions", "test_fraction", "tuning_fraction", "seed",
             "out_dir", "averaging", "timing", "forest", "mlp", "cost_fn", "cost_fp"}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    datasets = tuple(_dataset(e) for e in d.get("datasets", ()))
    base = Path(base_dir)
    datasets = tuple(
        DatasetEntry(**{**e.__dict__, **{k: str(base / getattr(e, k)) for k in ("spec", "csv")
                                          if getattr(e, k) and not Path(getattr(e, k)).is_absolute()}})
        for e in datasets
    )
    techniques = [_technique(e) for e in d.get("techniques", ())]
    # the baseline is always present, and first
    techniques = [t for t in techniques if t.kind != "baseline"]
    techniques.insert(0, TechniqueEntry("baseline", "baseline"))
    try:
        return BenchConfig(
            datasets=datasets,
            techniques=tuple(techniques),
            repetitions=int(d.get("repetitions", 100)),
            test_fraction=float(d.get("test_fraction", 0.2)),
            tuning_fraction=float(d.get("tuning_fraction", 0.2)),
            seed=int(d.get("seed", 0)),
            out_dir=str(d.get("out_dir", "bench_out")),
            averaging=str(d.get("averaging", "auto")),
            timing=str(d.get("timing", "wall")),
            forest=dict(d.get("forest", {})),
            mlp=dict(d.get("mlp", {})),
            cost_fn=float(d.get("cost_fn", 4.0)),
            cost_fp=float(d.get("cost_fp", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path) -> BenchConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return from_dict(data, base_dir=path.parent)
