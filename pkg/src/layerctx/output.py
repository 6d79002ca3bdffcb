"""CSV, SVG and manifest artifacts written by the command line."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from . import __version__  # noqa: E402
from .config import AppConfig, app_config_from_dict  # noqa: E402
from .errors import ConfigError  # noqa: E402
from .simulation import Comparison  # noqa: E402

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ["bench", "variant", "param", "per_call_ns", "mean_ms", "reps"]
RUN_STYLES = {"A": ("tab:red", "A: all high_band"), "B": ("tab:blue", "B: controlled"),
              "C": ("tab:green", "C: all low_band")}

plt.rcParams.update({
    "svg.hashsalt": "layerctx",
    "font.size": 9,
    "legend.fontsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
})


def write_series_csv(comparison: Comparison, path: Path) -> Path:
    frame = comparison.to_frame()
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info("Wrote %s rows to %s", len(frame), path)
    return path


def bench_frame(reports: list) -> pd.DataFrame:
    return pd.DataFrame(
        [[r.bench, r.variant, r.param, r.per_call_ns, r.mean * 1e3, r.repetitions] for r in reports],
        columns=BENCH_COLUMNS,
    )


def write_bench_csv(reports: list, path: Path) -> Path:
    bench_frame(reports).to_csv(path, index=False, lineterminator="\n")
    logger.info("Wrote %s benchmark rows to %s", len(reports), path)
    return path


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path


def plot_bandwidth(comparison: Comparison, path: Path) -> Path:
    """
    Two panels: served bandwidth of every run against the setpoint, and the
    high/low session creation rates of the controlled run.
    """
    fig, (top, bottom) = plt.subplots(nrows=2, ncols=1, sharex=True, figsize=(8, 6))
    for series in comparison.runs():
        frame = series.to_frame()
        color, label = RUN_STYLES.get(series.run, (None, series.run))
        top.plot(frame["t"], frame["bandwidth_bytes_per_sec"] / 1e6, color=color, linewidth=0.8, label=label)
    controlled = comparison.b or comparison.runs()[0]
    frame = controlled.to_frame()
    top.step(frame["t"], frame["setpoint"] / 1e6, where="post", color="black",
             linestyle="--", linewidth=0.8, label="setpoint")
    top.set_ylabel("bandwidth (MB/s)")
    top.legend(loc="upper left")

    bottom.plot(frame["t"], frame["high_sessions_per_sec"], color="tab:red", linewidth=0.8, label="high_band")
    bottom.plot(frame["t"], frame["low_sessions_per_sec"], color="tab:green", linewidth=0.8, label="low_band")
    bottom.set_xlabel("time (s)")
    bottom.set_ylabel(f"new sessions/s (run {controlled.run})")
    bottom.legend(loc="upper left")
    fig.tight_layout()
    return _save(fig, path)


def plot_bench(reports: list, path: Path) -> Path:
    """Grouped bars: per-call time for dispatch rows, mean milliseconds for page rows."""
    frame = bench_frame(reports)
    benches = list(dict.fromkeys(frame["bench"]))
    fig, axes = plt.subplots(nrows=1, ncols=len(benches), figsize=(4 * len(benches), 3.5), squeeze=False)
    for ax, bench in zip(axes[0], benches):
        rows = frame[frame["bench"] == bench]
        value = "per_call_ns" if bench == "dispatch" else "mean_ms"
        table = rows.pivot(index="param", columns="variant", values=value)
        table.plot.bar(ax=ax, rot=0)
        ax.set_title(bench)
        ax.set_xlabel("active layers" if bench == "dispatch" else "iterations")
        ax.set_ylabel("ns per call" if bench == "dispatch" else "ms per repetition")
    fig.tight_layout()
    return _save(fig, path)


def write_manifest(path: Path, command: str, app_config: AppConfig, seed: int, **options) -> Path:
    manifest = {
        "tool": "layerctx",
        "version": __version__,
        "command": command,
        "seed": seed,
        "options": options,
        "config": app_config.to_dict(),
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info("Wrote manifest %s", path)
    return path


def read_manifest(path: Path) -> tuple:
    """
    Load a manifest written by a previous run.

    Returns:
        tuple: (AppConfig with the recorded seed applied, the raw manifest dict)
    """
    try:
        manifest = json.loads(Path(path).read_text())
    except (OSError, ValueError) as e:
        raise ConfigError([f"manifest {path}: {e}"])
    if not isinstance(manifest, dict) or "config" not in manifest:
        raise ConfigError([f"manifest {path}: missing config section"])
    app_config = app_config_from_dict(manifest["config"])
    seed = manifest.get("seed")
    if seed is not None:
        app_config = app_config.with_seed(int(seed))
    return app_config, manifest
