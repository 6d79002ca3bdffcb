"""Per-control-flow layer activation: scoped frames over an indefinite base."""

from __future__ import annotations

import threading
from contextlib import contextmanager
from enum import Enum
from typing import TYPE_CHECKING, Callable, Iterable, Iterator, NamedTuple, Sequence, TypeVar

from .errors import ConstraintViolationError, ContextError

if TYPE_CHECKING:
    from .layers import Layer, Registry

T = TypeVar("T")


class Mode(str, Enum):
    ACTIVATE = "activate"
    SUPPRESS = "suppress"


class _Frame(NamedTuple):
    entries: tuple
    saved_effective: tuple
    indefinite_version: int


def effective_order(indefinite: Sequence, frames: Iterable[Sequence]) -> tuple:
    """
    Most-recent-first active layers.

    Scoped frames are newer than every indefinite entry. The most recent entry for a
    layer decides: Activate puts it in the order, Suppress hides it.
    """
    seen = set()
    order = []
    for entries in (*reversed(list(frames)), indefinite):
        for layer, mode in reversed(entries):
            if layer in seen:
                continue
            seen.add(layer)
            if mode is Mode.ACTIVATE:
                order.append(layer)
    return tuple(order)


class ContextState:
    """
    Activation record of one flow of control.

    Frames are pushed and popped strictly LIFO around a body. The state may move
    between threads only while no frame is open.
    """

    def __init__(self, registry: "Registry"):
        self.registry = registry
        self._indefinite: list = []
        self._frames: list = []
        self._version = 0
        self._owner = None
        self.effective: tuple = ()

    def __repr__(self):
        names = ", ".join(layer.name for layer in self.effective)
        return f"ContextState([{names}], depth={len(self._frames)})"

    @property
    def frames(self) -> tuple:
        return tuple(frame.entries for frame in self._frames)

    @property
    def depth(self) -> int:
        return len(self._frames)

    def active_layers(self) -> list:
        return list(self.effective)

    def _claim(self) -> None:
        me = threading.get_ident()
        if self._frames and self._owner != me:
            raise ContextError("ContextState is already in use by another thread")
        self._owner = me

    def _candidate(self, entries: tuple) -> tuple:
        """effective_order with entries as a new innermost frame, built from the current order."""
        seen = set()
        head = []
        for layer, mode in reversed(entries):
            if layer in seen:
                continue
            seen.add(layer)
            if mode is Mode.ACTIVATE:
                head.append(layer)
        return (*head, *(layer for layer in self.effective if layer not in seen))

    def _validate(self, candidate: tuple) -> None:
        validation = self.registry.constraints.validate(candidate)
        if not validation:
            raise ConstraintViolationError(validation)

    def push(self, layers: Sequence["Layer"], mode: Mode) -> None:
        """Open a scoped frame; an Activate frame is refused if the new effective set is invalid."""
        self._claim()
        for layer in layers:
            self.registry.check_layer(layer)
        entries = tuple((layer, mode) for layer in layers)
        candidate = self._candidate(entries) if entries else self.effective
        if mode is Mode.ACTIVATE and entries:
            self._validate(candidate)
        self._frames.append(_Frame(entries, self.effective, self._version))
        self.effective = candidate

    def pop(self) -> None:
        """Close the innermost frame, keeping indefinite changes made inside it."""
        if not self._frames:
            raise ContextError("no scoped frame to pop")
        frame = self._frames.pop()
        if frame.indefinite_version == self._version:
            self.effective = frame.saved_effective
        else:
            self.effective = effective_order(self._indefinite, self.frames)

    def run_scoped(self, layers: Sequence["Layer"], mode: Mode, body: Callable[[], T]) -> T:
        """Push a frame, run body with this state current, pop the frame however body exits."""
        self.push(layers, mode)
        try:
            var = self.registry._current
            if var.get(None) is self:
                return body()
            token = var.set(self)
            try:
                return body()
            finally:
                var.reset(token)
        finally:
            self.pop()

    @contextmanager
    def bound(self) -> Iterator["ContextState"]:
        """Make this state the registry's current one for the calling flow of control."""
        var = self.registry._current
        if var.get(None) is self:
            yield self
            return
        token = var.set(self)
        try:
            yield self
        finally:
            var.reset(token)

    @contextmanager
    def activate(self, *layers: "Layer") -> Iterator["ContextState"]:
        """Activate layers for the extent of a with block."""
        self.push(layers, Mode.ACTIVATE)
        try:
            with self.bound():
                yield self
        finally:
            self.pop()

    @contextmanager
    def suppress(self, *layers: "Layer") -> Iterator["ContextState"]:
        """Hide layers for the extent of a with block."""
        self.push(layers, Mode.SUPPRESS)
        try:
            with self.bound():
                yield self
        finally:
            self.pop()

    def activate_indefinite(self, layer: "Layer") -> None:
        """
        Activate layer until it is deactivated.

        The entry outlives the open frames, so the set left after each pending pop is
        validated as well. A Suppress frame can hide a conflict only while it is open.
        """
        self.registry.check_layer(layer)
        self._claim()
        indefinite = [*self._indefinite, (layer, Mode.ACTIVATE)]
        frames = self.frames
        candidate = effective_order(indefinite, frames)
        self._validate(candidate)
        for depth in range(len(frames) - 1, -1, -1):
            self._validate(effective_order(indefinite, frames[:depth]))
        self._indefinite = indefinite
        self._version += 1
        self.effective = candidate

    def deactivate(self, layer: "Layer") -> None:
        """Remove every indefinite entry of the layer; scoped frames are untouched."""
        remaining = [entry for entry in self._indefinite if entry[0] is not layer]
        if len(remaining) == len(self._indefinite):
            raise ContextError(f"layer {layer.name!r} was not activated indefinitely")
        self._claim()
        self._indefinite = remaining
        self._version += 1
        self.effective = effective_order(self._indefinite, self.frames)


def with_layers(ctx: ContextState, layers: Sequence["Layer"], body: Callable[[], T]) -> T:
    """Run body with layers activated; they are removed again however body exits."""
    return ctx.run_scoped(layers, Mode.ACTIVATE, body)


def without_layers(ctx: ContextState, layers: Sequence["Layer"], body: Callable[[], T]) -> T:
    """Run body with layers hidden from dispatch."""
    return ctx.run_scoped(layers, Mode.SUPPRESS, body)


def activate_indefinite(ctx: ContextState, layer: "Layer") -> None:
    """Activate layer in ctx beyond the current scope."""
    ctx.activate_indefinite(layer)


def deactivate(ctx: ContextState, layer: "Layer") -> None:
    """Undo indefinite activations of layer in ctx."""
    ctx.deactivate(layer)


def active_layers(ctx: ContextState) -> list:
    """Most-recent-first effective layers of ctx."""
    return ctx.active_layers()


def is_active(ctx: ContextState, layer: "Layer") -> bool:
    return layer in ctx.effective
