"""Runnable demos: drawing figures with layered printing, and caching driven by the manager."""

from __future__ import annotations

import logging
import sys
from typing import Optional

from .config import DemoConfig
from .context import with_layers
from .layers import Registry
from .manager import AutonomicKnowledge, AutonomicManager, Comparator, EcaRule, MetricSample

logger = logging.getLogger(__name__)


class ListSink:
    """Collects trace lines in memory."""

    def __init__(self):
        self.lines = []

    def emit(self, line: str) -> None:
        self.lines.append(line)


class StreamSink:
    """Writes trace lines to a text stream, stdout by default."""

    def __init__(self, stream=None):
        self.stream = stream or sys.stdout

    def emit(self, line: str) -> None:
        self.stream.write(line + "\n")


class Figure:
    def __init__(self, border: "Border"):
        self.border = border


class Border:
    pass


def demo_figure(sink) -> Registry:
    """
    A figure drawn once plainly and once with the bordered and shadowed layers active.

    bordered decorates figures only; shadowed decorates figures and their borders.
    """
    registry = Registry()
    bordered = registry.define_layer("bordered")
    shadowed = registry.define_layer("shadowed")

    @registry.layered("Figure.print")
    def figure_print(figure):
        sink.emit("Figure: drawing")

    @registry.layered("Border.print")
    def border_print(border):
        sink.emit("Border: drawing")

    @figure_print.around(bordered)
    def figure_with_border(cursor, figure):
        sink.emit("Figure: adding border")
        border_print(figure.border)
        return cursor.proceed(figure)

    @figure_print.around(shadowed)
    def figure_with_shadow(cursor, figure):
        cursor.proceed(figure)
        sink.emit("Figure: applying shadow")

    @border_print.around(shadowed)
    def border_with_shadow(cursor, border):
        cursor.proceed(border)
        sink.emit("Border: applying shadow")

    ctx = registry.context()
    figure = Figure(Border())
    figure_print(figure)
    with_layers(ctx, [bordered, shadowed], lambda: figure_print(figure))
    return registry


def demo_resource_storage(sink, use_layer: bool = True, demo: DemoConfig = DemoConfig(),
                          request: int = 7, registry: Optional[Registry] = None) -> int:
    """
    Two identical requests to a resource storage whose caching layer is planned by the
    autonomic manager.

    A response-time sample above the threshold makes the manager activate the layer
    tagged goal=latency; each request then runs under the manager's active layers.

    Returns:
        int: how many times the base request ran
    """
    registry = registry or Registry()
    layer = registry.define_layer("MinimizeRespTime", {"goal": "latency"})
    cache = {}
    calls = 0

    @registry.layered("ResourceStorage.request")
    def storage_request(req):
        nonlocal calls
        calls += 1
        sink.emit(f"ResourceStorage: fetching resource {req}")
        return f"resource-{req}"

    @storage_request.around(layer)
    def cached_request(cursor, req):
        if req in cache:
            sink.emit(f"MinimizeRespTime: cache hit for {req}")
            return cache[req]
        sink.emit(f"MinimizeRespTime: cache miss for {req}")
        result = cursor.proceed(req)
        cache[req] = result
        return result

    planned = registry.find_layers(goal="latency")
    rule = EcaRule(
        name="slow-responses",
        metric="response_time",
        comparator=Comparator.GT,
        threshold=demo.response_time_threshold,
        activate=frozenset(planned),
    )
    manager = AutonomicManager(AutonomicKnowledge(
        registry=registry, constraints=registry.constraints, rules=[rule]))

    manager.ingest_sample(MetricSample(0.0, demo.response_time_threshold / 2, metric="response_time"))
    if use_layer:
        manager.ingest_sample(MetricSample(1.0, demo.response_time_threshold * 2, metric="response_time"))
    active = sorted(manager.get_active_layers(), key=lambda l: l.name)
    sink.emit(f"ContextManager: active layers [{', '.join(l.name for l in active)}]")

    ctx = registry.context()
    for _ in range(2):
        with_layers(ctx, active, lambda: storage_request(request))
    logger.debug("Resource storage demo ran the base request %s times", calls)
    return calls
