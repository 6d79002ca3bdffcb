"""Context-oriented programming runtime with a MAPE-K autonomic manager."""

from .constraints import ConstraintSet, Validation
from .context import (
    ContextState,
    Mode,
    activate_indefinite,
    active_layers,
    deactivate,
    is_active,
    with_layers,
    without_layers,
)
from .dispatch import Cursor, DispatchChain, LayeredMethod, PartialKind, call, compose_chain, proceed
from .layers import Layer, Registry

__version__ = "1.0.0"

__all__ = [
    "ConstraintSet",
    "ContextState",
    "Cursor",
    "DispatchChain",
    "Layer",
    "LayeredMethod",
    "Mode",
    "PartialKind",
    "Registry",
    "Validation",
    "activate_indefinite",
    "active_layers",
    "call",
    "compose_chain",
    "deactivate",
    "is_active",
    "proceed",
    "with_layers",
    "without_layers",
]
