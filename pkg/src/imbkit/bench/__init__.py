"""Benchmark harness: config, technique registry, runner, reports and charts."""

from .charts import emit_charts, f1_chart, tradeoff_chart
from .config import BenchConfig, DatasetEntry, TechniqueEntry, from_dict, load_config
from .report import COLUMNS, emit_report, fmt6, format_table, read_rows_csv, read_rows_json
from .runner import BenchRow, aggregate, rep_splits, resolve_workers, run_benchmark, run_cell
from .techniques import REGISTRY, Context, Pipeline, build_pipeline

__all__ = [
    "BenchConfig", "BenchRow", "COLUMNS", "Context", "DatasetEntry", "Pipeline", "REGISTRY",
    "TechniqueEntry", "aggregate", "build_pipeline", "emit_charts", "emit_report", "f1_chart",
    "fmt6", "format_table", "from_dict", "load_config", "read_rows_csv", "read_rows_json",
    "rep_splits", "resolve_workers", "run_benchmark", "run_cell", "tradeoff_chart",
]
