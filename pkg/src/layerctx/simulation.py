"""Virtual-time simulation of the bandwidth-adaptive web application."""

from __future__ import annotations

import itertools
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
import simpy

from .config import HIGH_BAND, LOW_BAND, AppConfig, Granularity, SimulationConfig
from .errors import ConfigError, ControllableRegionError, SimulationError
from .manager import AutonomicManager, MetricSample
from .scheduler import AutonomicLoop
from .sensor import NetworkSensor
from .webapp import PageSink, Session, WebApp

logger = logging.getLogger(__name__)

SETTLING_TIME = 50.0  # seconds excluded after each setpoint step
SERIES_COLUMNS = ["t", "bandwidth_bytes_per_sec", "setpoint", "high_sessions_per_sec",
                  "low_sessions_per_sec", "run"]


@dataclass
class BandwidthSeries:
    """One row per measurement window; times are window ends in seconds."""

    run: str
    window: float
    times: list = field(default_factory=list)
    window_bytes: list = field(default_factory=list)
    setpoints: list = field(default_factory=list)
    high_sessions: list = field(default_factory=list)
    low_sessions: list = field(default_factory=list)
    pages: int = 0
    total_bytes: int = 0
    mixed_pages: int = 0
    incoherent_pages: int = 0

    @property
    def bandwidth(self) -> np.ndarray:
        return np.asarray(self.window_bytes, dtype=float) / self.window

    def session_rate(self) -> np.ndarray:
        return (np.asarray(self.high_sessions) + np.asarray(self.low_sessions)) / self.window

    def between(self, start: float, end: float) -> np.ndarray:
        """Mask of windows whose end time lies in [start, end]."""
        times = np.asarray(self.times)
        return (times >= start) & (times <= end)

    def mean_bandwidth(self, start: float, end: float) -> float:
        return float(self.bandwidth[self.between(start, end)].mean())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "bandwidth_bytes_per_sec": self.bandwidth,
            "setpoint": self.setpoints,
            "high_sessions_per_sec": np.asarray(self.high_sessions) / self.window,
            "low_sessions_per_sec": np.asarray(self.low_sessions) / self.window,
            "run": self.run,
        }, columns=SERIES_COLUMNS)


@dataclass
class Comparison:
    a: Optional[BandwidthSeries] = None
    b: Optional[BandwidthSeries] = None
    c: Optional[BandwidthSeries] = None

    def runs(self) -> list:
        return [s for s in (self.a, self.b, self.c) if s is not None]

    def to_frame(self) -> pd.DataFrame:
        return pd.concat([s.to_frame() for s in self.runs()], ignore_index=True)


def build_case_study(app_config: AppConfig, fraction: Optional[float] = None):
    """
    Wire a fresh registry, web application and autonomic manager.

    Args:
        app_config (AppConfig): page model, constraints, controller and rules
        fraction (float): pin the high-band fraction instead of running the controller

    Returns:
        tuple: (WebApp, AutonomicManager)
    """
    app = WebApp(app_config.simulation.page, constraints=app_config.constraints)
    manager = AutonomicManager.from_config(app_config, app.registry, fraction=fraction)
    return app, manager


def run_simulation(config: SimulationConfig, manager: AutonomicManager, app: WebApp,
                   run: str = "B") -> BandwidthSeries:
    """
    Event-driven run of the closed loop in virtual time.

    User i starts at i * ramp_interval / n_users and requests one page every
    inter_request_delay. After pages_per_session pages the next request expires the
    session; a new session is created and serves that request as its first page.
    """
    problems = config.problems()
    if problems:
        raise ConfigError(problems)

    env = simpy.Environment()
    ctx = app.registry.new_context()
    rng = np.random.default_rng(config.seed)
    think_rng = np.random.default_rng([config.seed, 1])
    window = config.measurement_window
    n_windows = int(round(config.duration / window))
    end_of_run = n_windows * window
    series = BandwidthSeries(run=run, window=window)
    window_bytes = [0] * n_windows
    high_sessions = [0] * n_windows
    low_sessions = [0] * n_windows
    session_ids = itertools.count()

    def window_of(now: float) -> int:
        return min(int(now / window + 1e-9), n_windows - 1)

    def serve(session: Session) -> int:
        sink = PageSink()
        if config.granularity is Granularity.SESSION:
            nbytes = app.render_page(ctx, session, sink)
            if sink.variants != {session.variant}:
                series.incoherent_pages += 1
        elif config.granularity is Granularity.PAGE:
            page_session = Session(session.id, session.user_id, manager.assign_session_layers(rng), env.now)
            nbytes = app.render_page(ctx, page_session, sink)
        else:
            nbytes = app.render_by_component(ctx, lambda: manager.assign_session_layers(rng), sink)
        if len(sink.variants) > 1:
            series.mixed_pages += 1
        return nbytes

    def user(user_id: int):
        session = None
        while env.now < end_of_run - 1e-9:
            now = env.now
            index = window_of(now)
            if session is None or session.pages_served >= config.pages_per_session:
                session = Session(next(session_ids), user_id, manager.assign_session_layers(rng), now)
                if session.variant == HIGH_BAND:
                    high_sessions[index] += 1
                else:
                    low_sessions[index] += 1
            nbytes = serve(session)
            session.pages_served += 1
            window_bytes[index] += nbytes
            series.pages += 1
            series.total_bytes += nbytes
            delay = config.inter_request_delay
            if config.jitter:
                delay += float(think_rng.uniform(0.0, config.jitter))
            yield env.timeout(delay)

    def ramp():
        for user_id in range(config.n_users):
            start = user_id * config.ramp_interval / config.n_users
            if start > env.now:
                yield env.timeout(start - env.now)
            env.process(user(user_id))

    def monitor():
        for k in range(n_windows):
            end = (k + 1) * window
            yield env.timeout(end - env.now)
            manager.update_setpoint(end)
            manager.ingest_sample(MetricSample(timestamp=end, value=window_bytes[k] / window))
            series.times.append(end)
            series.window_bytes.append(window_bytes[k])
            series.setpoints.append(manager.setpoint if manager.setpoint is not None else float("nan"))
            series.high_sessions.append(high_sessions[k])
            series.low_sessions.append(low_sessions[k])

    logger.info("Starting run %s: %s users, %.0f s, granularity %s",
                run, config.n_users, end_of_run, config.granularity.value)
    done = env.process(monitor())
    env.process(ramp())
    env.run(until=done)
    logger.info("Run %s finished: %s pages, %s bytes", run, series.pages, series.total_bytes)
    return series


def controllable_region(app_config: AppConfig) -> tuple:
    """Closed-form (all-low, all-high) steady-state bandwidth, bytes per second."""
    sim = app_config.simulation
    return sim.steady_state_bandwidth(LOW_BAND), sim.steady_state_bandwidth(HIGH_BAND)


def check_controllable(app_config: AppConfig) -> None:
    low, high = controllable_region(app_config)
    outside = [entry for entry in app_config.setpoints if not low < entry.bytes_per_sec < high]
    if outside:
        details = ", ".join(f"{e.bytes_per_sec:.0f} B/s at t={e.t:g}" for e in outside)
        raise ControllableRegionError(
            f"setpoints outside the controllable region ({low:.0f}, {high:.0f}) B/s: {details}")


def run_comparison(app_config: AppConfig, runs: str = "abc") -> Comparison:
    """Runs A (all high), B (controlled) and C (all low) over the same workload."""
    check_controllable(app_config)
    comparison = Comparison()
    for label, fraction in (("a", 1.0), ("b", None), ("c", 0.0)):
        if label not in runs:
            continue
        app, manager = build_case_study(app_config, fraction=fraction)
        setattr(comparison, label, run_simulation(app_config.simulation, manager, app, run=label.upper()))
    return comparison


def tracking_summary(series: BandwidthSeries, app_config: AppConfig,
                     settling: float = SETTLING_TIME) -> list:
    """Mean bandwidth per setpoint segment, skipping the ramp and each settling period."""
    sim = app_config.simulation
    entries = list(app_config.setpoints)
    rows = []
    for i, entry in enumerate(entries):
        start = max(entry.t, sim.ramp_interval) + settling
        end = entries[i + 1].t if i + 1 < len(entries) else sim.duration
        if start >= end:
            continue
        mean = series.mean_bandwidth(start, end)
        rows.append({
            "start": start,
            "end": end,
            "setpoint": entry.bytes_per_sec,
            "mean": mean,
            "error_pct": 100.0 * (mean - entry.bytes_per_sec) / entry.bytes_per_sec,
        })
    return rows


@dataclass
class StressReport:
    pages: int = 0
    mismatches: int = 0
    high_pages: int = 0
    low_pages: int = 0
    ticks: int = 0

    def merge(self, other: "StressReport") -> None:
        self.pages += other.pages
        self.mismatches += other.mismatches
        self.high_pages += other.high_pages
        self.low_pages += other.low_pages


def run_stress(app_config: AppConfig, threads: Optional[int] = None,
               sessions_per_thread: Optional[int] = None, live_loop: bool = True) -> StressReport:
    """
    Threaded variant: each worker owns a context and renders its sessions while the
    shared manager is stepped by the live autonomic loop.
    """
    threads = threads or app_config.stress.threads
    sessions_per_thread = sessions_per_thread or app_config.stress.sessions_per_thread
    sim = app_config.simulation
    app, manager = build_case_study(app_config)
    sensor = NetworkSensor()
    loop = AutonomicLoop(manager, sensor, interval=app_config.stress.loop_interval) if live_loop else None
    report = StressReport()
    lock = threading.Lock()
    barrier = threading.Barrier(threads)
    failures = []

    def worker(index: int):
        try:
            ctx = app.registry.context()
            rng = np.random.default_rng([sim.seed, index])
            local = StressReport()
            barrier.wait()
            for s in range(sessions_per_thread):
                session = Session(index * sessions_per_thread + s, index,
                                  manager.assign_session_layers(rng), time.monotonic())
                for _ in range(sim.pages_per_session):
                    sink = PageSink()
                    nbytes = app.render_page(ctx, session, sink)
                    sensor.record(nbytes)
                    local.pages += 1
                    if session.variant == HIGH_BAND:
                        local.high_pages += 1
                    else:
                        local.low_pages += 1
                    if nbytes != app.expected_bytes(session.layers) or sink.variants != {session.variant}:
                        local.mismatches += 1
            with lock:
                report.merge(local)
        except threading.BrokenBarrierError as e:
            failures.append(e)
        except Exception as e:
            logger.error("Stress worker %s failed: %s", index, e)
            failures.insert(0, e)
            barrier.abort()

    workers = [threading.Thread(target=worker, args=(i,), name=f"session-{i}") for i in range(threads)]
    if loop is not None:
        loop.start()
    try:
        for t in workers:
            t.start()
        for t in workers:
            t.join()
    finally:
        if loop is not None:
            loop.shutdown()
            report.ticks = loop.ticks
    if failures:
        raise SimulationError(f"{len(failures)} stress workers failed: {failures[0]}")
    logger.info("Stress run: %s pages over %s threads, %s mismatches", report.pages, threads, report.mismatches)
    return report
