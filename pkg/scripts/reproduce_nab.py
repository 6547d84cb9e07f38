#!/usr/bin/env python3
"""Reproduction of the published NAB benchmark runs (needs local data).

Expects a directory containing the two NAB series in our input formats:

    cc2.csv  cc2.labels   (ec2_cpu_utilization_825cc2)
    b3b.csv  b3b.labels   (rds_cpu_utilization_e47b3b)

The csv files are the NAB originals (timestamp,value header). The label
files hold one inclusive index range per line (start,end); convert the
expert annotations to point indices yourself, since the NAB JSON corpus
is timestamp-keyed.

Each series is duplicated ten times end to end, then detected with the
sliding-window mode at several window sizes; the script prints accuracy,
retraining and latency summaries per configuration. Numbers will land
near, not on, the published figures: the original experiments used a
different LSTM backend whose training internals are unspecified.

Usage: python scripts/reproduce_nab.py /path/to/nab-data [--k 7]
"""

import argparse
import sys
import time
from pathlib import Path

from repad2.detector import Algorithm, DetectorConfig, run_stream
from repad2.evaluation import MatchConfig, summarize
from repad2.series_io import extend_labels, extend_series, load_labels, load_series

WINDOWS = (1440, 4032, 8064, 16128)
DATASETS = ("cc2", "b3b")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("data_dir", type=Path)
    parser.add_argument("--k", type=int, default=7)
    parser.add_argument("--copies", type=int, default=10)
    args = parser.parse_args()

    for name in DATASETS:
        csv_path = args.data_dir / f"{name}.csv"
        labels_path = args.data_dir / f"{name}.labels"
        if not csv_path.exists() or not labels_path.exists():
            print(f"missing {csv_path} or {labels_path}", file=sys.stderr)
            return 2
        series = load_series(csv_path)
        labels = load_labels(labels_path)
        long_series = extend_series(series, args.copies)
        long_labels = extend_labels(labels, len(series), args.copies)
        print(f"\n=== {name}-{args.copies}: {len(long_series)} points, "
              f"{len(long_labels)} labeled anomalies ===")
        print(f"{'window':>8} {'precision':>9} {'recall':>7} {'f':>6} {'retrain':>8} "
              f"{'lat_retrain':>12} {'lat_normal':>11} {'wall_s':>7}")
        for w in WINDOWS:
            config = DetectorConfig(algorithm=Algorithm.REPAD2, window=w)
            started = time.perf_counter()
            reports = run_stream(config, long_series)
            wall = time.perf_counter() - started
            s = summarize(reports, long_labels, MatchConfig(k=args.k))
            lat_r = f"{s.latency_retrain[0]:.4f}s" if s.latency_retrain else "-"
            lat_n = f"{s.latency_noretrain[0]:.5f}s" if s.latency_noretrain else "-"
            print(f"{w:>8} {s.precision:>9.3f} {s.recall:>7.3f} {s.f_score:>6.3f} "
                  f"{s.retraining_ratio:>8.4f} {lat_r:>12} {lat_n:>11} {wall:>7.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
