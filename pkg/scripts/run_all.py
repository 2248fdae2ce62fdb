"""Run the detection and identification benchmarks from configs/ and redraw their charts."""

import argparse
import sys
from pathlib import Path

from imbkit.bench.cli import main as bench

ROOT = Path(__file__).resolve().parent.parent


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--reps", type=int, help="override repetitions (e.g. 5 for a smoke run)")
    parser.add_argument("--parallel", type=int, default=1)
    args = parser.parse_args()
    for name in ("detection", "identification"):
        argv = ["run", "--config", str(ROOT / "configs" / f"{name}.json"),
                "--out", str(Path(args.out) / name), "--parallel", str(args.parallel)]
        if args.reps:
            argv += ["--reps", str(args.reps)]
        code = bench(argv)
        if code:
            sys.exit(code)


if __name__ == "__main__":
    main()
