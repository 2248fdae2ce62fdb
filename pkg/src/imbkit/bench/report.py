"""CSV / JSON emission with six significant digits."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from ..errors import ConfigError
from .runner import BenchRow

COLUMNS = ("dataset", "technique", "mean_f1", "vmr", "train_ms", "infer_ms_per_1k",
           "improvement_pct", "reps", "status")
NUMERIC = ("mean_f1", "vmr", "train_ms", "infer_ms_per_1k", "improvement_pct")


def fmt6(x) -> str:
    """Six significant digits; empty for missing values. Negative zero prints as 0."""
    if x is None:
        return ""
    text = f"{float(x):.6g}"
    return "0" if text == "-0" else text


def _record(row: BenchRow) -> dict:
    out = {"dataset": row.dataset, "technique": row.technique}
    for name in NUMERIC:
        text = fmt6(getattr(row, name))
        out[name] = float(text) if text else None
    out["reps"] = int(row.reps)
    out["status"] = row.status
    return out


def emit_report(rows, fmt: str, path) -> Path:
    if not rows:
        raise ValueError("no rows to report")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COLUMNS)
            for row in rows:
                rec = _record(row)
                writer.writerow([fmt6(rec[c]) if c in NUMERIC else rec[c] for c in COLUMNS])
    elif fmt == "json":
        payload = [_record(row) for row in rows]
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path


def _parse(rec: dict) -> BenchRow:
    values = {}
    for name in NUMERIC:
        raw = rec[name]
        values[name] = None if raw in ("", None) else float(raw)
    return BenchRow(rec["dataset"], rec["technique"], values["mean_f1"], values["vmr"],
                    values["train_ms"], values["infer_ms_per_1k"], values["improvement_pct"],
                    int(rec["reps"]), rec["status"])


def read_rows_csv(path) -> list:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != COLUMNS:
                raise ConfigError(f"{path}: header must be {','.join(COLUMNS)}")
            rows = [_parse(rec) for rec in reader]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: malformed row ({exc})") from exc
    if not rows:
        raise ConfigError(f"{path} has no rows")
    return rows


def read_rows_json(path) -> list:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [_parse(rec) for rec in data]


def format_table(rows) -> str:
    head = f"{'dataset':<22} {'technique':<22} {'mean_f1':>8} {'vmr':>9} {'impr%':>8} {'infer/1k':>9}  status"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r.dataset:<22} {r.technique:<22} {fmt6(r.mean_f1):>8} {fmt6(r.vmr):>9} "
                     f"{fmt6(r.improvement_pct):>8} {fmt6(r.infer_ms_per_1k):>9}  {r.status}")
    return "\n".join(lines)
