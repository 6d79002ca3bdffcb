"""Exception hierarchy shared by the runtime, the manager and the simulator."""

from __future__ import annotations


class LayerCtxError(Exception):
    """Base class for every error raised by layerctx."""


class RegistrationError(LayerCtxError):
    """A layer, method or partial definition could not be registered."""


class UnknownLayerError(LayerCtxError):
    """A layer was used that the registry does not know about."""


class ContextError(LayerCtxError):
    """A ContextState was misused (wrong thread, unbalanced frames, bad deactivation)."""


class ConstraintDeclarationError(LayerCtxError):
    """A constraint declaration contradicts the constraints already declared."""


class ConstraintViolationError(LayerCtxError):
    """An activation was refused because the resulting layer set violates constraints."""

    def __init__(self, validation, message=None):
        self.validation = validation
        violations = ", ".join(str(v) for v in validation.violations)
        super().__init__(message or f"activation refused: {violations}")


class DispatchError(LayerCtxError):
    """Contextual dispatch failed."""


class NoNextDefinitionError(DispatchError):
    """proceed was invoked with no further definition in the chain."""


class ControllerError(LayerCtxError):
    """The feedback controller was stepped with invalid parameters."""


class SampleOrderError(LayerCtxError):
    """A metric sample arrived with a timestamp older than the previous one."""


class ConfigError(LayerCtxError):
    """Configuration failed validation; ``errors`` lists every field-level problem."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


class SimulationError(LayerCtxError):
    """The simulation could not be run."""


class ControllableRegionError(SimulationError):
    """A setpoint lies outside the band reachable between all-low and all-high runs."""


class BenchmarkError(LayerCtxError):
    """A benchmark was misconfigured or computed inconsistent results."""
