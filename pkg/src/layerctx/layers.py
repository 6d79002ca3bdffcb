"""Layer and layered-method registry: the static half of the COP runtime."""

from __future__ import annotations

import contextvars
import logging
import uuid
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional

from .constraints import ConstraintSet
from .context import ContextState
from .dispatch import LayeredMethod, PartialKind
from .errors import RegistrationError, UnknownLayerError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Layer:
    """A first-class, named behavioural variation. Compared by identity."""

    name: str
    metadata: Mapping[str, str] = field(default_factory=lambda: MappingProxyType({}))
    id: str = field(default_factory=lambda: uuid.uuid4().hex)

    def __repr__(self):
        return f"Layer({self.name!r})"


class Registry:
    """
    Holds layers, layered methods and layer constraints.

    Registration happens during a setup phase; afterwards the registry is only read
    and can be shared by every thread. Each thread dispatches through its own
    ContextState, obtained from context().
    """

    def __init__(self, constraints: Optional[ConstraintSet] = None):
        self.constraints = constraints or ConstraintSet()
        self._layers: dict = {}
        self._methods: dict = {}
        self._current = contextvars.ContextVar(f"layerctx-{id(self):x}")

    # -- layers -----------------------------------------------------------

    def define_layer(self, name: str, metadata: Optional[Mapping[str, str]] = None) -> Layer:
        """Create and register a layer; names are unique within the registry."""
        if name in self._layers:
            raise RegistrationError(f"layer {name!r} is already defined")
        layer = Layer(name=name, metadata=MappingProxyType(dict(metadata or {})))
        self._layers[name] = layer
        logger.debug("Defined layer %s", name)
        return layer

    def layer(self, name: str) -> Layer:
        """Look a layer up by name."""
        try:
            return self._layers[name]
        except KeyError:
            raise UnknownLayerError(f"unknown layer {name!r}")

    def layers(self) -> tuple:
        """All layers in definition order."""
        return tuple(self._layers.values())

    def find_layers(self, **metadata: str) -> tuple:
        """Layers whose metadata contains every given key/value pair."""
        return tuple(
            layer for layer in self._layers.values()
            if all(layer.metadata.get(k) == v for k, v in metadata.items())
        )

    def check_layer(self, layer: Layer) -> Layer:
        """Return layer if it belongs to this registry, else raise UnknownLayerError."""
        if self._layers.get(layer.name) is not layer:
            raise UnknownLayerError(f"layer {layer.name!r} is not registered here")
        return layer

    # -- methods ----------------------------------------------------------

    def register_method(self, name: str, base: Callable) -> LayeredMethod:
        """Register a layered method whose base runs when no partial takes over."""
        if name in self._methods:
            raise RegistrationError(f"method {name!r} is already registered")
        if not callable(base):
            raise RegistrationError(f"base of {name!r} must be callable")
        method = LayeredMethod(self, name, base)
        self._methods[name] = method
        return method

    def layered(self, name: str) -> Callable[[Callable], LayeredMethod]:
        """Decorator form of register_method."""
        def decorator(base):
            return self.register_method(name, base)
        return decorator

    def add_partial(self, method: LayeredMethod, layer: Layer, kind: PartialKind, body: Callable) -> None:
        """Attach a before, around or after body of layer to method."""
        if self._methods.get(method.name) is not method:
            raise RegistrationError(f"method {method.name!r} is not registered here")
        method.add_partial(self.check_layer(layer), PartialKind(kind), body)

    def partials_of(self, layer: Layer) -> list:
        """Reflection: (method name, kind) of every partial definition the layer declares."""
        self.check_layer(layer)
        return [
            (method.name, partial.kind)
            for method in self._methods.values()
            for partial in method.partials
            if partial.layer is layer
        ]

    # -- contexts ---------------------------------------------------------

    def context(self) -> ContextState:
        """The ContextState bound to the calling flow of control, created on first use."""
        ctx = self._current.get(None)
        if ctx is None:
            ctx = ContextState(self)
            self._current.set(ctx)
        return ctx

    def new_context(self) -> ContextState:
        """A fresh, unbound ContextState with no active layers."""
        return ContextState(self)
