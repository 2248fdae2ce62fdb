"""``bench`` command line: run, datagen, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..datagen import CsvSchema, generate, load_spec, save_csv
from ..errors import ConfigError, ImbalanceError
from .charts import emit_charts
from .config import load_config
from .report import emit_report, format_table, read_rows_csv
from .runner import all_failed, run_benchmark, with_overrides

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED = 0, 2, 3


def _cmd_run(args) -> int:
    try:
        cfg = with_overrides(load_config(args.config), args.reps, args.seed, args.out)
        rows = run_benchmark(cfg, args.parallel)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out_dir)
    emit_report(rows, "csv", out / "report.csv")
    emit_report(rows, "json", out / "report.json")
    emit_charts(rows, out)
    print(format_table(rows))
    if all_failed(rows):
        print("every cell failed", file=sys.stderr)
        return EXIT_ALL_FAILED
    return EXIT_OK


def _cmd_datagen(args) -> int:
    try:
        spec = load_spec(args.spec)
        ds = generate(spec)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ImbalanceError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(ds, out, CsvSchema(tuple(spec.feature_names)))
    print(f"wrote {ds.n_samples} rows to {out} (class counts {list(map(int, ds.counts))})")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        rows = read_rows_csv(args.rows)
    except ConfigError as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(format_table(rows))
    if args.charts:
        out = Path(args.out) if args.out else Path(args.rows).parent
        for path in emit_charts(rows, out):
            print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Class-imbalance mitigation benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the technique x dataset x repetition matrix")
    run.add_argument("--config", required=True, help="JSON config file")
    run.add_argument("--out", help="output directory (overrides out_dir)")
    run.add_argument("--reps", type=int, help="repetitions (overrides the config)")
    run.add_argument("--seed", type=int, help="master seed (overrides the config)")
    run.add_argument("--parallel", type=int, default=1, help="worker processes; BENCH_THREADS wins")
    run.set_defaults(func=_cmd_run)

    gen = sub.add_parser("datagen", help="write a synthetic dataset to CSV")
    gen.add_argument("--spec", required=True, help="JSON GenSpec or {\"preset\": name}")
    gen.add_argument("--out", required=True, help="CSV path")
    gen.set_defaults(func=_cmd_datagen)

    rep = sub.add_parser("report", help="print a report CSV and optionally redraw charts")
    rep.add_argument("--rows", required=True, help="report.csv from a previous run")
    rep.add_argument("--charts", action="store_true", help="write SVG charts")
    rep.add_argument("--out", help="chart directory (default: next to the CSV)")
    rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which is also our config-error code
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
