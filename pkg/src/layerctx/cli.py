"""The layerctx command line: demo, simulate and bench."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from . import __version__
from .benchmarks import (
    DEFAULT_CALLS,
    DEFAULT_ITERATIONS,
    DEFAULT_REPETITIONS,
    FULL_CALLS,
    FULL_ITERATIONS,
    MAX_LAYERS,
    bench_dispatch,
    overhead_ratio,
    run_dispatch_suite,
    run_page_suite,
)
from .config import AppConfig, Granularity, config, load_app_config
from .demos import StreamSink, demo_figure, demo_resource_storage
from .errors import ConfigError, LayerCtxError
from .output import plot_bandwidth, plot_bench, read_manifest, write_bench_csv, write_manifest, write_series_csv
from .simulation import run_comparison, run_stress, tracking_summary

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def _runs(value: str) -> str:
    runs = value.lower()
    if not runs or any(c not in "abc" for c in runs) or len(set(runs)) != len(runs):
        raise argparse.ArgumentTypeError(f"runs must be a selection of a, b, c; got {value!r}")
    return "".join(c for c in "abc" if c in runs)


def _layers(value: str) -> int:
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}")
    if not 1 <= k <= MAX_LAYERS:
        raise argparse.ArgumentTypeError(f"active layers must be between 1 and {MAX_LAYERS}, got {k}")
    return k


def _positive(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {n}")
    return n


def _repetitions(value: str) -> int:
    n = _positive(value)
    if n < 2:
        raise argparse.ArgumentTypeError(f"need at least 2 repetitions, got {n}")
    return n


def _seed(value: str) -> int:
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}")
    if seed < 0:
        raise argparse.ArgumentTypeError(f"seed must be >= 0, got {seed}")
    return seed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layerctx",
        description="Context-oriented layers, an autonomic manager and the adaptive web application case study.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{demo,simulate,bench}")
    sub.required = True

    demo = sub.add_parser("demo", help="print a demo trace")
    demo.add_argument("name", choices=["figure", "storage"])
    demo.add_argument("--config", help="JSON config file")
    demo.add_argument("--no-layer", action="store_true", help="storage demo without the caching layer")

    simulate = sub.add_parser("simulate", help="run the adaptive web application simulation")
    simulate.add_argument("--config", help="JSON config file")
    simulate.add_argument("--out", help="output directory")
    simulate.add_argument("--seed", type=_seed)
    simulate.add_argument("--runs", type=_runs, help="any of a, b, c (default abc)")
    simulate.add_argument("--manifest", help="re-run from a manifest.json")
    simulate.add_argument("--granularity", choices=[g.value for g in Granularity])
    simulate.add_argument("--jitter", type=float, help="max extra think time in seconds")
    simulate.add_argument("--stress", action="store_true", help="threaded run against the live autonomic loop")

    bench = sub.add_parser("bench", help="run the dispatch or page benchmarks")
    bench.add_argument("kind", choices=["dispatch", "page"])
    bench.add_argument("--out", help="output directory")
    bench.add_argument("--layers", type=_layers, help=f"only this many active layers (1..{MAX_LAYERS})")
    bench.add_argument("--calls", type=_positive)
    bench.add_argument("--iterations", type=_positive)
    bench.add_argument("--repetitions", type=_repetitions)
    bench.add_argument("--full", action="store_true", help="10^7 dispatch calls or 10^5 page iterations")
    return parser


def _output_dir(value: Optional[str]) -> Path:
    out = Path(value or config.OUTPUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def resolve_seed(flag: Optional[int], app_config: AppConfig) -> int:
    """--seed flag, then LAYERCTX_SEED, then the config's simulation.seed."""
    if flag is not None:
        return flag
    env_seed = config.SEED
    if env_seed is not None:
        return env_seed
    return app_config.simulation.seed


def cmd_demo(args) -> int:
    sink = StreamSink(sys.stdout)
    if args.name == "figure":
        demo_figure(sink)
    else:
        app_config = load_app_config(args.config)
        demo_resource_storage(sink, use_layer=not args.no_layer, demo=app_config.demo)
    return EXIT_OK


def _print_summary(comparison, app_config: AppConfig) -> None:
    sim = app_config.simulation
    for series in comparison.runs():
        steady = series.between(sim.ramp_interval + 50.0, sim.duration)
        rate = series.session_rate()[steady].mean() if steady.any() else float("nan")
        print(f"run {series.run}: {series.pages} pages, {series.total_bytes} bytes, "
              f"{rate:.1f} sessions/s in steady state")
        if series.mixed_pages:
            print(f"  {series.mixed_pages} pages mixed high and low components")
    if comparison.b is not None:
        for row in tracking_summary(comparison.b, app_config):
            print(f"  [{row['start']:.0f}, {row['end']:.0f}] setpoint {row['setpoint'] / 1e6:.2f} MB/s, "
                  f"mean {row['mean'] / 1e6:.2f} MB/s, error {row['error_pct']:+.1f}%")


def cmd_simulate(args) -> int:
    runs = args.runs
    manifest = None
    if args.manifest:
        app_config, manifest = read_manifest(args.manifest)
        runs = runs or manifest.get("options", {}).get("runs")
    else:
        app_config = load_app_config(args.config)
    runs = runs or "abc"

    sim = app_config.simulation
    if args.granularity:
        sim = replace(sim, granularity=Granularity(args.granularity))
    if args.jitter is not None:
        if args.jitter < 0:
            raise ConfigError([f"--jitter: must be >= 0, got {args.jitter}"])
        sim = replace(sim, jitter=args.jitter)
    app_config = replace(app_config, simulation=sim)
    # a manifest's recorded seed outranks LAYERCTX_SEED; only --seed overrides it
    if manifest is not None and args.seed is None:
        seed = app_config.simulation.seed
    else:
        seed = resolve_seed(args.seed, app_config)
    app_config = app_config.with_seed(seed)

    if args.stress:
        report = run_stress(app_config)
        print(f"stress: {report.pages} pages ({report.high_pages} high, {report.low_pages} low), "
              f"{report.mismatches} mismatches, {report.ticks} controller ticks")
        return EXIT_OK if report.mismatches == 0 else EXIT_ERROR

    out = _output_dir(args.out)
    comparison = run_comparison(app_config, runs=runs)
    write_series_csv(comparison, out / "series.csv")
    plot_bandwidth(comparison, out / "figure7.svg")
    write_manifest(out / "manifest.json", "simulate", app_config, seed, runs=runs)
    _print_summary(comparison, app_config)
    return EXIT_OK


def cmd_bench(args) -> int:
    app_config = load_app_config(None)
    seed = resolve_seed(None, app_config)
    repetitions = args.repetitions or DEFAULT_REPETITIONS
    out = _output_dir(args.out)
    calls = iterations = None
    if args.kind == "dispatch":
        calls = args.calls or (FULL_CALLS if args.full else DEFAULT_CALLS)
        if args.layers:
            reports = list(bench_dispatch(args.layers, calls, repetitions))
        else:
            reports = run_dispatch_suite(calls, repetitions)
        for r in reports:
            print(f"dispatch k={r.param} {r.variant}: {r.per_call_ns:.1f} ns/call")
    else:
        iterations = args.iterations or (FULL_ITERATIONS if args.full else DEFAULT_ITERATIONS)
        reports = run_page_suite(iterations, repetitions)
        for r in reports:
            print(f"page {r.variant}: mean {r.mean * 1e3:.3f} ms, best {r.best * 1e3:.3f} ms")
        print(f"cop/conditional ratio: {overhead_ratio(reports):.2f}")
    write_bench_csv(reports, out / "bench.csv")
    plot_bench(reports, out / "bench.svg")
    write_manifest(out / "manifest.json", "bench", app_config, seed, kind=args.kind, layers=args.layers,
                   calls=calls, iterations=iterations, repetitions=repetitions, full=args.full)
    return EXIT_OK


COMMANDS = {"demo": cmd_demo, "simulate": cmd_simulate, "bench": cmd_bench}


def main(argv: Optional[list] = None) -> int:
    """Parse arguments and run one subcommand; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("Invalid configuration")
        for problem in e.errors:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_ERROR
    except LayerCtxError as e:
        logger.error("Error running %s: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
