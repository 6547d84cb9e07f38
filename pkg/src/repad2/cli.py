"""Command-line front end.

Subcommands: prepare, detect, eval, bench, synth, serve. Every output
file carries its run manifest as comment header lines. Exit codes: 0 on
success, 2 for usage errors, 3 for data errors, 4 for internal errors.
Set REPAD_LOG=debug|info|warning to control diagnostics.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__, detector, evaluation, series_io, trace
from .errors import ConfigError, RepadError
from .lstm_core import LstmConfig


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

WINDOW_PRESETS = (1440, 4032, 8064, 16128)


def _detector_config(args: argparse.Namespace, series_values=None) -> detector.DetectorConfig:
    lstm = LstmConfig(seed=args.seed)
    predictor = None
    if args.predictor != "lstm":
        predictor = detector.build_predictor(args.predictor, lstm, series_values)
    return detector.DetectorConfig(
        algorithm=detector.Algorithm(args.algorithm),
        window=args.window,
        lookback=args.lookback,
        lstm=lstm,
        predictor=predictor,
        store_history=args.store_history,
    )


def _detect_manifest(args: argparse.Namespace, input_path: Path, out_path: Path) -> trace.RunManifest:
    return trace.RunManifest.build(
        "detect",
        input=input_path,
        out=out_path,
        algorithm=args.algorithm,
        window=args.window,
        lookback=args.lookback,
        seed=args.seed,
        predictor=args.predictor,
    )


def _default_trace_path(input_path: Path) -> Path:
    return input_path.with_suffix(".trace.csv")


def _detect_one(input_path: str, out_path: str, args_dict: dict) -> str:
    """Worker for one (input, config) pair; also used by the --jobs fan-out."""
    args = argparse.Namespace(**args_dict)
    series = series_io.load_series(input_path)
    config = _detector_config(args, series_values=series.values())
    reports = detector.run_stream(config, series)
    manifest = _detect_manifest(args, Path(input_path), Path(out_path))
    trace.write_trace(out_path, manifest, reports)
    anomalies = sum(1 for r in reports if r.verdict is detector.Verdict.ANOMALY)
    return f"{input_path}: {len(reports)} points, {anomalies} anomalies -> {out_path}"


def cmd_detect(args: argparse.Namespace) -> int:
    tasks = []
    for raw in args.inputs:
        input_path = Path(raw)
        if len(args.inputs) == 1 and args.out is not None and not Path(args.out).is_dir():
            out_path = Path(args.out)
        elif args.out is not None:
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            out_path = out_dir / _default_trace_path(input_path).name
        else:
            out_path = _default_trace_path(input_path)
        tasks.append((str(input_path), str(out_path)))
    args_dict = {
        k: v for k, v in vars(args).items() if k not in ("func", "inputs", "out", "jobs")
    }
    if args.jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_detect_one, inp, out, args_dict) for inp, out in tasks]
            for fut in futures:
                print(fut.result())
    else:
        for inp, out in tasks:
            print(_detect_one(inp, out, args_dict))
    return EXIT_OK


def cmd_prepare(args: argparse.Namespace) -> int:
    input_path = Path(args.input)
    series = series_io.load_series(input_path)
    extended = series_io.extend_series(series, args.copies)
    out_path = Path(args.out) if args.out else input_path.with_name(
        f"{input_path.stem}-{args.copies}{input_path.suffix}"
    )
    manifest = trace.RunManifest.build(
        "prepare", input=input_path, copies=args.copies, out=out_path, labels=args.labels
    )
    series_io.write_series(out_path, extended, header_lines=manifest.header_lines())
    print(f"{input_path}: {len(series)} points x {args.copies} -> {out_path} ({len(extended)} points)")
    if args.labels:
        labels_path = Path(args.labels)
        labels = series_io.load_labels(labels_path)
        extended_labels = series_io.extend_labels(labels, len(series), args.copies)
        labels_out = Path(args.labels_out) if args.labels_out else labels_path.with_name(
            f"{labels_path.stem}-{args.copies}{labels_path.suffix}"
        )
        series_io.write_labels(labels_out, extended_labels, header_lines=manifest.header_lines())
        print(f"{labels_path}: {len(labels)} labels x {args.copies} -> {labels_out} "
              f"({len(extended_labels)} labels)")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    trace_path = Path(args.trace)
    _, reports = trace.read_trace(trace_path)
    labels = series_io.load_labels(args.labels)
    cfg = evaluation.MatchConfig(k=args.k, fp_mode=args.fp_mode)
    summary = evaluation.summarize(reports, labels, cfg)
    record = summary.as_dict()
    record["k"] = args.k
    record["fp_mode"] = args.fp_mode
    for key, value in record.items():
        print(f"{key}={_fmt_value(value)}")
    out_path = Path(args.out) if args.out else trace_path.with_suffix(".summary.txt")
    manifest = trace.RunManifest.build(
        "eval", trace=trace_path, labels=args.labels, k=args.k, fp_mode=args.fp_mode, out=out_path
    )
    trace.write_keyvalues(out_path, manifest, {k: _fmt_value(v) for k, v in record.items()})
    print(f"summary -> {out_path}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    input_path = Path(args.input)
    series = series_io.load_series(input_path)
    config = _detector_config(args, series_values=series.values())
    det = detector.Detector(config)
    peak_retained = 0
    reports = []
    started = time.perf_counter()
    for point in series:
        reports.append(det.step(point))
        retained = det.tracker.retained_count()
        if retained > peak_retained:
            peak_retained = retained
    elapsed = time.perf_counter() - started
    decided = [r for r in reports if r.verdict is not detector.Verdict.WARMUP]
    retrain = evaluation.latency_stats([r.decision_latency for r in decided if r.retrained])
    noretrain = evaluation.latency_stats([r.decision_latency for r in decided if not r.retrained])
    record = {
        "points": len(reports),
        "anomalies": det.anomaly_count,
        "retrain_events": det.retrain_count,
        "retraining_ratio": _fmt_value(detector.retraining_ratio(reports)) if reports else "",
        "warmup_trainings": det.warmup_train_count,
        "peak_retained_aare": peak_retained,
        "latency_retrain_mean_s": _fmt_value(retrain[0] if retrain else None),
        "latency_retrain_std_s": _fmt_value(retrain[1] if retrain else None),
        "latency_noretrain_mean_s": _fmt_value(noretrain[0] if noretrain else None),
        "latency_noretrain_std_s": _fmt_value(noretrain[1] if noretrain else None),
        "total_wall_s": _fmt_value(elapsed),
    }
    for key, value in record.items():
        print(f"{key}={value}")
    if args.out:
        manifest = trace.RunManifest.build(
            "bench",
            input=input_path,
            algorithm=args.algorithm,
            window=args.window,
            lookback=args.lookback,
            seed=args.seed,
            predictor=args.predictor,
            out=args.out,
        )
        trace.write_keyvalues(args.out, manifest, record)
    return EXIT_OK


def _parse_spike(text: str) -> tuple[int, float]:
    try:
        idx, _, mag = text.partition(":")
        return int(idx), float(mag)
    except ValueError:
        raise ConfigError(f"bad spike spec {text!r}, expected INDEX:MAGNITUDE")


def _load_spec_file(path: str) -> dict:
    """key=value synthetic spec file; spikes as comma-separated INDEX:MAG pairs."""
    values: dict = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, val = line.partition("=")
            if not eq:
                raise ConfigError(f"bad spec line {raw.rstrip()!r}, expected key=value")
            values[key.strip()] = val.strip()
    parsed: dict = {}
    casts = {
        "length": int, "period": float, "amplitude": float, "offset": float,
        "noise_sigma": float, "seed": int, "interval_minutes": int,
    }
    for key, val in values.items():
        if key == "spikes":
            parsed["spikes"] = tuple(_parse_spike(s) for s in val.split(",") if s.strip())
        elif key in casts:
            parsed[key] = casts[key](val)
        else:
            raise ConfigError(f"unknown synthetic spec key {key!r}")
    return parsed


def cmd_synth(args: argparse.Namespace) -> int:
    fields = dict(
        length=args.length,
        period=args.period,
        amplitude=args.amplitude,
        offset=args.offset,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
        spikes=tuple(_parse_spike(s) for s in args.spike or ()),
    )
    if args.spec_file:
        fields.update(_load_spec_file(args.spec_file))
    spec = series_io.SyntheticSpec(**fields)
    series, labels = series_io.generate_synthetic(spec)
    out_path = Path(args.out)
    labels_out = Path(args.labels_out) if args.labels_out else out_path.with_suffix(".labels")
    manifest = trace.RunManifest.build(
        "synth",
        out=out_path,
        labels_out=labels_out,
        length=spec.length,
        period=spec.period,
        amplitude=spec.amplitude,
        offset=spec.offset,
        noise_sigma=spec.noise_sigma,
        seed=spec.seed,
        spikes=";".join(f"{i}:{m}" for i, m in spec.spikes),
    )
    series_io.write_series(out_path, series, header_lines=manifest.header_lines())
    series_io.write_labels(labels_out, labels, header_lines=manifest.header_lines())
    print(f"{len(series)} points -> {out_path}; {len(labels)} labels -> {labels_out}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("repad2.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


def _fmt_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _add_detect_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", choices=("repad", "repad2"), default="repad2")
    p.add_argument("--window", type=int, default=None, metavar="W",
                   help=f"sliding window for repad2 (typical: {WINDOW_PRESETS})")
    p.add_argument("--lookback", type=int, default=3, metavar="B")
    p.add_argument("--seed", type=int, default=140)
    p.add_argument("--predictor", default="lstm", help=argparse.SUPPRESS)
    p.add_argument("--store-history", action="store_true",
                   help="repad only: retain every AARE value (demonstrates unbounded growth)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repad2",
        description="Streaming anomaly detection with an adaptive three-sigma threshold.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="duplicate a series (and labels) end to end")
    p.add_argument("input")
    p.add_argument("--copies", type=int, required=True)
    p.add_argument("--labels")
    p.add_argument("--out")
    p.add_argument("--labels-out")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("detect", help="run the detector over csv input, write a trace")
    p.add_argument("inputs", nargs="+", metavar="input")
    p.add_argument("--out", help="trace path (single input) or output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for multiple inputs")
    _add_detect_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score a trace against labels")
    p.add_argument("trace")
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--fp-mode", choices=("runs", "each"), default="runs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run the detector and report latency/memory figures")
    p.add_argument("input")
    p.add_argument("--out")
    _add_detect_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a labeled synthetic stream")
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out")
    p.add_argument("--length", type=int, default=2880)
    p.add_argument("--period", type=float, default=288.0)
    p.add_argument("--amplitude", type=float, default=10.0)
    p.add_argument("--offset", type=float, default=30.0)
    p.add_argument("--noise-sigma", type=float, default=0.2)
    p.add_argument("--spike", action="append", metavar="INDEX:MAGNITUDE")
    p.add_argument("--seed", type=int, default=140)
    p.add_argument("--spec-file", help="key=value synthetic spec file")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="run the HTTP detection service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("REPAD_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RepadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # pragma: no cover - internal invariant violations
        import traceback

        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
