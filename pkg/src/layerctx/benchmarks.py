"""Dispatch and page-generation benchmarks: layered dispatch against plain conditionals."""

from __future__ import annotations

import logging
import threading
import timeit
from dataclasses import dataclass

import numpy as np

from .config import HIGH_BAND, LOW_BAND, PageModel
from .context import with_layers
from .dispatch import call
from .errors import BenchmarkError
from .layers import Registry
from .webapp import PageComponent, PageSink, WebApp, build_page

logger = logging.getLogger(__name__)

MAX_LAYERS = 5
DEFAULT_CALLS = 1_000_000
FULL_CALLS = 10_000_000
DEFAULT_ITERATIONS = 10_000
FULL_ITERATIONS = 100_000
DEFAULT_REPETITIONS = 10


@dataclass(frozen=True)
class BenchReport:
    """
    Timings of one benchmark variant.

    times holds the measured repetitions only; the warm-up run is never included.
    """

    bench: str
    variant: str
    param: int
    iterations: int
    repetitions: int
    times: tuple  # seconds per repetition
    checksum: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.times))

    @property
    def best(self) -> float:
        return float(np.min(self.times))

    @property
    def per_call_ns(self) -> float:
        return self.mean / self.iterations * 1e9

    @property
    def best_per_call_ns(self) -> float:
        return self.best / self.iterations * 1e9


def _measure(run, repetitions: int) -> tuple:
    """Time run() repetitions + 1 times and drop the first (warm-up) timing."""
    if repetitions < 2:
        raise BenchmarkError(f"repetitions must be at least 2, got {repetitions}")
    timings = timeit.Timer(run).repeat(repeat=repetitions + 1, number=1)
    return tuple(timings[1:])


def _check_count(name: str, value: int) -> None:
    if value < 1:
        raise BenchmarkError(f"{name} must be positive, got {value}")


class _Accumulator:
    """Result sink the benchmarked loops add into, so no call can be skipped unseen."""

    def __init__(self, expected: int):
        self.expected = expected
        self.total = 0

    def check(self, variant: str) -> None:
        if self.total != self.expected:
            raise BenchmarkError(f"{variant} computed checksum {self.total}, expected {self.expected}")


def _dispatch_method(k: int):
    registry = Registry()
    layers = [registry.define_layer(f"layer{i}") for i in range(1, MAX_LAYERS + 1)]
    method = registry.register_method("bench.dispatch", lambda x: x + 1)
    for layer in layers:
        method.around(layer)(lambda cursor, x: cursor.proceed(x))
    return registry, method, layers[:k]


def _plain_chain():
    """Six directly nested functions; entering at f[5 - k] runs k + 1 of them."""
    def f5(x):
        return x + 1

    def f4(x):
        return f5(x)

    def f3(x):
        return f4(x)

    def f2(x):
        return f3(x)

    def f1(x):
        return f2(x)

    def f0(x):
        return f1(x)

    return (f0, f1, f2, f3, f4, f5)


def bench_dispatch(k: int, n_calls: int = DEFAULT_CALLS, repetitions: int = DEFAULT_REPETITIONS) -> tuple:
    """
    Per-call cost of a layered method with k proceeding Around partials active,
    against a plain call chain of the same depth.

    Returns:
        tuple: (cop BenchReport, baseline BenchReport)
    """
    if not 1 <= k <= MAX_LAYERS:
        raise BenchmarkError(f"active layers must be between 1 and {MAX_LAYERS}, got {k}")
    _check_count("n_calls", n_calls)
    expected = n_calls * (n_calls + 1) // 2

    registry, method, active = _dispatch_method(k)
    ctx = registry.new_context()
    cop_sink = _Accumulator(expected)

    def run_cop():
        def loop():
            total = 0
            for i in range(n_calls):
                total += call(ctx, method, i)
            return total
        cop_sink.total = with_layers(ctx, active, loop)
        cop_sink.check("cop")

    entry = _plain_chain()[MAX_LAYERS - k]
    plain_sink = _Accumulator(expected)

    def run_plain():
        total = 0
        for i in range(n_calls):
            total += entry(i)
        plain_sink.total = total
        plain_sink.check("baseline")

    cop = BenchReport("dispatch", "cop", k, n_calls, repetitions, _measure(run_cop, repetitions), cop_sink.total)
    plain = BenchReport("dispatch", "baseline", k, n_calls, repetitions,
                        _measure(run_plain, repetitions), plain_sink.total)
    logger.info("Dispatch k=%s: cop %.0f ns/call, baseline %.0f ns/call", k, cop.per_call_ns, plain.per_call_ns)
    return cop, plain


class _DiscardSink(PageSink):
    """Counts bytes and throws the markup away."""

    def mark(self, variant: str) -> None:
        pass


class ConditionalPage:
    """
    The page without layers: each component checks the active variation itself and
    picks to_string_high or to_string_low.
    """

    def __init__(self, page: PageModel):
        self.home = build_page(page)
        self.variation = threading.local()

    def activate(self, variant: str) -> None:
        self.variation.current = variant

    def to_string(self, component: PageComponent, sink: PageSink) -> int:
        if self.variation.current == HIGH_BAND:
            return self.to_string_high(component, sink)
        return self.to_string_low(component, sink)

    def to_string_high(self, component: PageComponent, sink: PageSink) -> int:
        total = component.size.high
        sink.write(total)
        for child in component.children:
            total += self.to_string(child, sink)
        return total

    def to_string_low(self, component: PageComponent, sink: PageSink) -> int:
        total = component.size.low
        sink.write(total)
        for child in component.children:
            total += self.to_string(child, sink)
        return total


def _alternating(iterations: int) -> list:
    return [HIGH_BAND if i % 2 == 0 else LOW_BAND for i in range(iterations)]


def bench_page(variant: str, iterations: int = DEFAULT_ITERATIONS, repetitions: int = DEFAULT_REPETITIONS,
               page: PageModel = PageModel()) -> BenchReport:
    """
    Time page generation; iterations alternate between the high and low variants.

    variant "cop" renders through the layered method under with_layers; "conditional"
    branches on a thread-local flag.
    """
    _check_count("iterations", iterations)
    bands = _alternating(iterations)
    expected = sum(page.page_bytes(band) for band in bands)
    sink = _Accumulator(expected)

    if variant == "cop":
        app = WebApp(page)
        ctx = app.registry.new_context()
        layers = {HIGH_BAND: [app.high], LOW_BAND: [app.low]}

        def run():
            out = _DiscardSink()
            for band in bands:
                with_layers(ctx, layers[band], lambda: app.render(app.home, out))
            sink.total = out.total
            sink.check(variant)
    elif variant == "conditional":
        conditional = ConditionalPage(page)

        def run():
            out = _DiscardSink()
            for band in bands:
                conditional.activate(band)
                conditional.to_string(conditional.home, out)
            sink.total = out.total
            sink.check(variant)
    else:
        raise BenchmarkError(f"unknown page variant {variant!r}; expected 'cop' or 'conditional'")

    report = BenchReport("page", variant, iterations, iterations, repetitions, _measure(run, repetitions), sink.total)
    logger.info("Page %s: mean %.3f ms over %s repetitions", variant, report.mean * 1e3, repetitions)
    return report


def run_dispatch_suite(n_calls: int = DEFAULT_CALLS, repetitions: int = DEFAULT_REPETITIONS) -> list:
    reports = []
    for k in range(1, MAX_LAYERS + 1):
        reports.extend(bench_dispatch(k, n_calls, repetitions))
    return reports


def run_page_suite(iterations: int = DEFAULT_ITERATIONS, repetitions: int = DEFAULT_REPETITIONS) -> list:
    reports = [bench_page(v, iterations, repetitions) for v in ("conditional", "cop")]
    if reports[0].checksum != reports[1].checksum:
        raise BenchmarkError("cop and conditional pages produced different byte counts")
    return reports


def overhead_ratio(reports: list) -> float:
    """Mean cop time over mean conditional time for a page suite."""
    by_variant = {r.variant: r for r in reports if r.bench == "page"}
    return by_variant["cop"].mean / by_variant["conditional"].mean
