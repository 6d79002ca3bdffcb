"""The adaptive web application: page components whose rendering is layered by bandwidth."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

from .config import HIGH_BAND, LOW_BAND, ConstraintsConfig, PageModel, VariantBytes
from .constraints import ConstraintSet
from .context import ContextState, with_layers
from .dispatch import Cursor
from .layers import Layer, Registry

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PageComponent:
    name: str
    size: VariantBytes
    children: tuple = ()


@dataclass
class PageSink:
    """Stands in for the servlet output stream: counts bytes, records variants used."""

    total: int = 0
    variants: set = field(default_factory=set)

    def write(self, nbytes: int) -> None:
        self.total += nbytes

    def mark(self, variant: str) -> None:
        self.variants.add(variant)


@dataclass
class Session:
    """A user session; its layer set is fixed when the session is created."""

    id: int
    user_id: int
    layers: frozenset
    created_at: float
    pages_served: int = 0
    variant: str = field(init=False)
    ordered_layers: tuple = field(init=False, repr=False)

    def __post_init__(self):
        names = {layer.name for layer in self.layers}
        self.variant = HIGH_BAND if HIGH_BAND in names else LOW_BAND
        self.ordered_layers = tuple(ordered(self.layers))


def build_page(model: PageModel) -> PageComponent:
    """Home with model.first_level components, each holding model.second_level sub-components."""
    first_level = tuple(
        PageComponent(
            name=f"Component{i}",
            size=model.first_level_bytes,
            children=tuple(
                PageComponent(name=f"Component{i}{j}", size=model.second_level_bytes)
                for j in range(1, model.second_level + 1)
            ),
        )
        for i in range(1, model.first_level + 1)
    )
    return PageComponent(name="Home", size=model.home, children=first_level)


def ordered(layers: Iterable[Layer]) -> list:
    return sorted(layers, key=lambda layer: layer.name)


class WebApp:
    """
    Registers the high_band and low_band layers and the layered render method.

    The base render is the full-quality page. high_band marks the page and proceeds
    to it; low_band replaces it with the light variant of every component.
    """

    def __init__(self, page: PageModel = PageModel(), registry: Optional[Registry] = None,
                 constraints: ConstraintsConfig = ConstraintsConfig()):
        self.page = page
        self.registry = registry or Registry()
        self.high = self.registry.define_layer(HIGH_BAND, {"bandwidth": "high", "quality": "full"})
        self.low = self.registry.define_layer(LOW_BAND, {"bandwidth": "low", "quality": "light"})
        self.registry.constraints = ConstraintSet.from_names(
            self.registry, excludes=constraints.excludes, requires=constraints.requires)
        if frozenset((self.high, self.low)) not in self.registry.constraints.excludes:
            self.registry.constraints.declare_excludes(self.high, self.low)

        self.render = self.registry.register_method("PageComponent.render", self._render_full)
        self.render.around(self.high)(self._render_high)
        self.render.around(self.low)(self._render_low)

        self.home = build_page(page)
        self._chrome = replace(self.home, children=())

    def _render_full(self, component: PageComponent, sink: PageSink) -> int:
        total = component.size.high
        sink.write(total)
        for child in component.children:
            total += self.render(child, sink)
        return total

    def _render_high(self, cursor: Cursor, component: PageComponent, sink: PageSink) -> int:
        sink.mark(HIGH_BAND)
        return cursor.proceed(component, sink)

    def _render_low(self, cursor: Cursor, component: PageComponent, sink: PageSink) -> int:
        sink.mark(LOW_BAND)
        total = component.size.low
        sink.write(total)
        for child in component.children:
            total += self.render(child, sink)
        return total

    def render_page(self, ctx: ContextState, session: Session, sink: Optional[PageSink] = None) -> int:
        """Render the whole page under the session's layers; returns the page's bytes."""
        sink = sink if sink is not None else PageSink()
        return with_layers(ctx, session.ordered_layers, lambda: self.render(self.home, sink))

    def render_by_component(self, ctx: ContextState, choose: Callable[[], frozenset],
                            sink: Optional[PageSink] = None) -> int:
        """
        Component-level adaptation: the chrome and each first-level component ask for
        their own layer set, so one page may mix variants.
        """
        sink = sink if sink is not None else PageSink()
        total = with_layers(ctx, ordered(choose()), lambda: self.render(self._chrome, sink))
        for child in self.home.children:
            total += with_layers(ctx, ordered(choose()), lambda c=child: self.render(c, sink))
        return total

    def expected_bytes(self, layers: frozenset) -> int:
        return self.page.low_bytes if self.low in layers else self.page.high_bytes
