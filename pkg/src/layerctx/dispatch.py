"""Layered methods and contextual dispatch with proceed chains."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable

from .errors import DispatchError, NoNextDefinitionError, RegistrationError

if TYPE_CHECKING:
    from .context import ContextState
    from .layers import Layer, Registry

logger = logging.getLogger(__name__)

_method_ids = itertools.count(1)


class PartialKind(str, Enum):
    AROUND = "around"
    BEFORE = "before"
    AFTER = "after"


@dataclass(frozen=True)
class PartialDefinition:
    """
    A method body attached to a layer.

    Around bodies take (cursor, *args); Before and After bodies take (*args) and
    their return values are ignored.
    """

    layer: "Layer"
    kind: PartialKind
    body: Callable


@dataclass(frozen=True)
class DispatchChain:
    """Befores, Arounds (base last) and Afters selected for one effective order."""

    befores: tuple
    arounds: tuple
    afters: tuple
    base: Callable
    before_bodies: tuple = field(init=False, repr=False)
    around_bodies: tuple = field(init=False, repr=False)
    after_bodies: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "before_bodies", tuple(p.body for p in self.befores))
        object.__setattr__(self, "around_bodies", tuple(p.body for p in self.arounds) + (self.base,))
        object.__setattr__(self, "after_bodies", tuple(p.body for p in self.afters))

    def describe(self) -> list:
        """Stage list as (layer name, kind) pairs, with ("base", "around") in its place."""
        return (
            [(p.layer.name, p.kind.value) for p in self.befores]
            + [(p.layer.name, p.kind.value) for p in self.arounds]
            + [("base", PartialKind.AROUND.value)]
            + [(p.layer.name, p.kind.value) for p in self.afters]
        )

    def cursor(self, position: int = 0) -> "Cursor":
        return Cursor(self, position)


class Cursor:
    """Position of the Around stage currently running; proceed runs the next one."""

    __slots__ = ("_chain", "_position", "_used")

    def __init__(self, chain: DispatchChain, position: int):
        self._chain = chain
        self._position = position
        self._used = False

    def proceed(self, *args: Any) -> Any:
        bodies = self._chain.around_bodies
        nxt = self._position + 1
        if nxt >= len(bodies):
            raise NoNextDefinitionError("no next definition: proceed called from the base stage")
        if self._used:
            raise DispatchError("proceed may run the next definition only once per call")
        self._used = True
        if nxt == len(bodies) - 1:
            return bodies[nxt](*args)
        return bodies[nxt](Cursor(self._chain, nxt), *args)


def proceed(cursor: Cursor, *args: Any) -> Any:
    return cursor.proceed(*args)


class LayeredMethod:
    """A base implementation plus per-layer partial definitions."""

    def __init__(self, registry: "Registry", name: str, base: Callable):
        self.id = next(_method_ids)
        self.registry = registry
        self.name = name
        self.base = base
        self._partials: dict = {}
        self._chains: dict = {}

    def __repr__(self):
        return f"LayeredMethod({self.name!r})"

    @property
    def partials(self) -> tuple:
        return tuple(self._partials.values())

    def add_partial(self, layer: "Layer", kind: PartialKind, body: Callable) -> None:
        key = (layer, kind)
        if key in self._partials:
            raise RegistrationError(f"{layer.name} already defines a {kind.value} partial for {self.name}")
        self._partials[key] = PartialDefinition(layer, kind, body)
        self._chains = {}
        logger.debug("Added %s partial of %s in layer %s", kind.value, self.name, layer.name)

    def _decorator(self, layer: "Layer", kind: PartialKind):
        def decorator(body):
            self.registry.add_partial(self, layer, kind, body)
            return body
        return decorator

    def around(self, layer: "Layer"):
        return self._decorator(layer, PartialKind.AROUND)

    def before(self, layer: "Layer"):
        return self._decorator(layer, PartialKind.BEFORE)

    def after(self, layer: "Layer"):
        return self._decorator(layer, PartialKind.AFTER)

    def compose(self, effective: tuple) -> DispatchChain:
        chain = self._chains.get(effective)
        if chain is None:
            def pick(kind):
                return [self._partials[(layer, kind)] for layer in effective if (layer, kind) in self._partials]
            chain = DispatchChain(
                befores=tuple(pick(PartialKind.BEFORE)),
                arounds=tuple(pick(PartialKind.AROUND)),
                afters=tuple(reversed(pick(PartialKind.AFTER))),
                base=self.base,
            )
            self._chains[effective] = chain
        return chain

    def __call__(self, *args: Any) -> Any:
        ctx = self.registry._current.get(None)
        if ctx is None:
            return call(self.registry.context(), self, *args)
        return _run(self._chains.get(ctx.effective) or self.compose(ctx.effective), args)


def compose_chain(ctx: "ContextState", method: LayeredMethod) -> DispatchChain:
    return method.compose(ctx.effective)


def call(ctx: "ContextState", method: LayeredMethod, *args: Any) -> Any:
    """
    Dispatch method under ctx's effective layers.

    Befores run in effective order, then the Around chain, then the Afters in
    reverse effective order. An error aborts the call; Afters are not run.
    """
    var = ctx.registry._current
    if var.get(None) is ctx:
        return _run(method.compose(ctx.effective), args)
    token = var.set(ctx)
    try:
        return _run(method.compose(ctx.effective), args)
    finally:
        var.reset(token)


def _run(chain: DispatchChain, args: tuple) -> Any:
    for before in chain.before_bodies:
        before(*args)
    bodies = chain.around_bodies
    if len(bodies) == 1:
        result = bodies[0](*args)
    else:
        result = bodies[0](Cursor(chain, 0), *args)
    for after in chain.after_bodies:
        after(*args)
    return result
