"""Gaussian-mixture telemetry analogs calibrated to a target FDR, and CSV I/O."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import Dataset, compute_fdr, derive_seed, rng_from
from .errors import (
    CalibrationFailed,
    EmptyAfterCleaning,
    InvalidSpec,
    MissingColumn,
    UnmappableLabel,
)

FEATURE_NAMES_2D = ("BER", "OSNR")


@dataclass(frozen=True)
class Component:
    mean: tuple
    var: tuple  # diagonal covariance
    weight: float = 1.0


@dataclass(frozen=True)
class ClassSpec:
    count: int
    components: tuple


@dataclass(frozen=True)
class GenSpec:
    classes: tuple
    n_features: int = 2
    target_fdr: float | None = None
    fdr_tolerance: float = 0.05
    seed: int = 0
    name: str = "custom"
    feature_names: tuple = FEATURE_NAMES_2D
    separation: float = 1.0  # global scale applied to class mean offsets

    @property
    def counts(self):
        return tuple(c.count for c in self.classes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GenSpec":
        classes = tuple(
            ClassSpec(int(c["count"]), tuple(Component(tuple(comp["mean"]), tuple(comp["var"]),
                                                       float(comp.get("weight", 1.0)))
                                             for comp in c["components"]))
            for c in d["classes"]
        )
        extra = {k: d[k] for k in ("n_features", "target_fdr", "fdr_tolerance", "seed", "name",
                                   "separation") if k in d}
        if "feature_names" in d:
            extra["feature_names"] = tuple(d["feature_names"])
        return cls(classes=classes, **extra)


def validate(spec: GenSpec):
    if len(spec.classes) < 1:
        raise InvalidSpec("spec has no classes")
    if len(spec.feature_names) != spec.n_features:
        raise InvalidSpec("feature_names must match n_features")
    if spec.separation <= 0:
        raise InvalidSpec("separation must be positive")
    for c, cls in enumerate(spec.classes):
        if cls.count < 1:
            raise InvalidSpec(f"class {c}: count must be >= 1")
        if not cls.components:
            raise InvalidSpec(f"class {c}: no mixture components")
        weights = np.array([comp.weight for comp in cls.components], dtype=float)
        if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0):
            raise InvalidSpec(f"class {c}: mixture weights must be >= 0 and sum to 1")
        for comp in cls.components:
            if len(comp.mean) != spec.n_features or len(comp.var) != spec.n_features:
                raise InvalidSpec(f"class {c}: component dimension mismatch")
            if any(v <= 0 for v in comp.var):
                raise InvalidSpec(f"class {c}: variances must be positive")


def _center(spec: GenSpec) -> np.ndarray:
    """Count-weighted centre of the class means (before scaling)."""
    total = np.zeros(spec.n_features)
    n = 0
    for cls in spec.classes:
        mean = sum(np.asarray(comp.mean, float) * comp.weight for comp in cls.components)
        total += cls.count * mean
        n += cls.count
    return total / n


def _component_counts(weights, total) -> np.ndarray:
    """Largest-remainder apportionment of ``total`` rows to mixture components."""
    share = weights / weights.sum() * total
    counts = np.floor(share).astype(np.int64)
    order = np.argsort(-(share - counts), kind="stable")
    counts[order[: total - counts.sum()]] += 1
    return counts


def generate(spec: GenSpec) -> Dataset:
    """Draw each class's rows from its mixture; class blocks in label order.

    Component sizes are fixed by apportionment rather than drawn, so a rare
    component cannot swing the class variance between seeds.

    Component means are pushed away from the common centre by
    ``spec.separation``. The standard-normal draws depend only on the seed,
    so changing ``separation`` moves points without resampling them.
    """
    validate(spec)
    center = _center(spec)
    X_parts, y_parts = [], []
    for c, cls in enumerate(spec.classes):
        rng = rng_from(derive_seed(spec.seed, "class", c))
        weights = np.array([comp.weight for comp in cls.components], dtype=float)
        which = rng.permutation(np.repeat(np.arange(weights.size), _component_counts(weights, cls.count)))
        z = rng.standard_normal((cls.count, spec.n_features))
        means = np.array([center + spec.separation * (np.asarray(comp.mean, float) - center)
                          for comp in cls.components])
        sds = np.sqrt(np.array([comp.var for comp in cls.components], dtype=float))
        X_parts.append(means[which] + sds[which] * z)
        y_parts.append(np.full(cls.count, c))
    return Dataset(np.vstack(X_parts), np.concatenate(y_parts), len(spec.classes))


def measured_fdr(spec: GenSpec) -> float:
    return compute_fdr(generate(spec)).mean


def calibrate_to_fdr(spec: GenSpec, lo: float = 1e-3, hi: float = 1e3, max_iter: int = 60) -> GenSpec:
    """Bisect the separation scalar until the measured FDR is within tolerance.

    Bisection runs on log(separation) and keeps halving the bracket until the
    miss is below a tenth of the tolerance (or ``max_iter`` is spent), which
    leaves room for resampling noise on other seeds.
    """
    if spec.target_fdr is None or spec.target_fdr <= 0:
        raise InvalidSpec("target_fdr must be positive")
    if len(spec.classes) < 2:
        raise InvalidSpec("calibration needs at least two classes")
    target, tol = spec.target_fdr, spec.fdr_tolerance

    def f(s):
        return measured_fdr(replace(spec, separation=s))

    f_lo, f_hi = f(lo), f(hi)
    if not f_lo <= target <= f_hi:
        raise CalibrationFailed(f"target {target} outside reachable [{f_lo:.4g}, {f_hi:.4g}]")
    a, b = np.log(lo), np.log(hi)
    best = None
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        val = f(np.exp(mid))
        if best is None or abs(val - target) < abs(best[1] - target):
            best = (np.exp(mid), val)
        if abs(val - target) <= tol / 10:
            break
        if val < target:
            a = mid
        else:
            b = mid
    s, val = best
    if abs(val - target) > tol:
        raise CalibrationFailed(f"closest FDR {val:.4g} misses {target} +/- {tol}")
    return replace(spec, separation=float(s))


# ---------------------------------------------------------------- preset analogs


def _gauss(mean, var, weight=1.0):
    return Component(tuple(float(m) for m in mean), tuple(float(v) for v in var), float(weight))


def detection_low_fdr(seed: int = 0) -> GenSpec:
    """Hard-failure analog: 7859 normal / 194 failure rows, heavy class overlap.

    A small degraded-but-healthy share of the normal class (1%) sits on top of
    the failure signature, so close to a third of the rows inside the failure
    region are labelled normal.
    """
    normal = ClassSpec(7859, (
        _gauss((0.0, 0.0), (1.0, 1.0), 0.99),
        _gauss((1.0, -1.0), (1.5, 1.5), 0.01),
    ))
    failure = ClassSpec(194, (_gauss((1.0, -1.0), (1.0, 1.0)),))
    return GenSpec((normal, failure), target_fdr=0.769, fdr_tolerance=0.05, seed=seed,
                   name="detection_low_fdr")


def detection_high_fdr(seed: int = 0) -> GenSpec:
    """Soft-failure analog: 6253 normal / 714 failure rows, well separated."""
    normal = ClassSpec(6253, (_gauss((0.0, 0.0), (1.0, 1.0)),))
    failure = ClassSpec(714, (_gauss((1.0, -1.0), (0.04, 0.04)),))
    return GenSpec((normal, failure), target_fdr=2.254, fdr_tolerance=0.05, seed=seed,
                   name="detection_high_fdr")


IDENTIFICATION_COUNTS = (2184, 224, 152, 991, 254, 325)


def identification(seed: int = 0) -> GenSpec:
    """Six-class analog: 1, 2 and 4 crowd one region, 0, 3 and 5 sit far apart."""
    means = {
        0: (0.0, 0.0),
        1: (10.0, 10.0),
        2: (10.02, 9.98),
        3: (20.0, 0.0),
        4: (9.98, 10.02),
        5: (0.0, 20.0),
    }
    classes = tuple(
        ClassSpec(n, (_gauss(means[c], (1.0, 1.0)),)) for c, n in enumerate(IDENTIFICATION_COUNTS)
    )
    return GenSpec(classes, target_fdr=181.2, fdr_tolerance=5.0, seed=seed, name="identification")


PRESETS = {
    "detection_low_fdr": detection_low_fdr,
    "detection_high_fdr": detection_high_fdr,
    "identification": identification,
}


def preset(name: str, seed: int = 0, calibrate: bool = True) -> GenSpec:
    if name not in PRESETS:
        raise InvalidSpec(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    spec = PRESETS[name](seed)
    return calibrate_to_fdr(spec) if calibrate and spec.target_fdr is not None else spec


def load_spec(path) -> GenSpec:
    """A JSON spec file: either {"preset": name, "seed": s} or a full GenSpec dict."""
    data = json.loads(Path(path).read_text())
    if "preset" in data:
        return preset(data["preset"], int(data.get("seed", 0)), bool(data.get("calibrate", True)))
    spec = GenSpec.from_dict(data)
    return calibrate_to_fdr(spec) if spec.target_fdr is not None and data.get("calibrate", True) else spec


# ---------------------------------------------------------------- CSV


@dataclass(frozen=True)
class CsvSchema:
    feature_columns: tuple = ("BER", "OSNR")
    label_column: str = "label"
    label_mapping: dict = field(default_factory=dict)  # raw text -> class id; empty: ints


@dataclass(frozen=True)
class LoadResult:
    dataset: Dataset
    dropped_count: int
    source_rows: np.ndarray  # line positions (0-based, header excluded) that survived


def _parse_float(text):
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    return value if np.isfinite(value) else None


def load_csv(path, schema: CsvSchema = CsvSchema(), n_classes: int | None = None) -> LoadResult:
    """Read a comma-separated file with a header row.

    Rows whose feature cells are empty, non-numeric or non-finite are dropped
    and counted. Labels go through ``schema.label_mapping`` when given,
    otherwise they must be integer literals.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyAfterCleaning(f"{path} is empty") from None
        needed = list(schema.feature_columns) + [schema.label_column]
        missing = [c for c in needed if c not in header]
        if missing:
            raise MissingColumn(f"columns {missing} not in header {header}")
        fpos = [header.index(c) for c in schema.feature_columns]
        lpos = header.index(schema.label_column)
        rows, labels, kept = [], [], []
        dropped = 0
        for i, record in enumerate(reader):
            if not record:
                continue
            values = [_parse_float(record[p]) if p < len(record) else None for p in fpos]
            if any(v is None for v in values):
                dropped += 1
                continue
            raw = record[lpos].strip() if lpos < len(record) else ""
            if schema.label_mapping:
                if raw not in schema.label_mapping:
                    raise UnmappableLabel(f"line {i + 2}: label {raw!r} not in mapping")
                label = int(schema.label_mapping[raw])
            else:
                try:
                    label = int(raw)
                except ValueError:
                    raise UnmappableLabel(f"line {i + 2}: label {raw!r} is not an integer") from None
            rows.append(values)
            labels.append(label)
            kept.append(i)
    if not rows:
        raise EmptyAfterCleaning(f"no usable rows in {path} ({dropped} dropped)")
    ds = Dataset(np.array(rows, dtype=np.float64), np.array(labels), n_classes or 0)
    return LoadResult(ds, dropped, np.array(kept))


def save_csv(ds: Dataset, path, schema: CsvSchema = CsvSchema()):
    """Write features with ``repr`` precision so a reload is bit-exact."""
    inverse = {v: k for k, v in schema.label_mapping.items()}
    if len(schema.feature_columns) != ds.n_features:
        raise MissingColumn("schema feature columns do not match dataset width")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(schema.feature_columns) + [schema.label_column])
        for x, y in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in x] + [inverse.get(int(y), int(y))])
