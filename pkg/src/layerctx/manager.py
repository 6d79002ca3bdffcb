"""MAPE-K autonomic manager: monitor samples, ECA rules and a PI controller over layer sets."""

from __future__ import annotations

import logging
import operator
import threading
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Optional

from .config import HIGH_BAND, LOW_BAND, AppConfig, Mode, RuleConfig
from .constraints import ConstraintSet, Validation
from .errors import ConfigError, ConstraintViolationError, ControllerError, SampleOrderError, UnknownLayerError

if TYPE_CHECKING:
    from .layers import Layer, Registry

logger = logging.getLogger(__name__)

HISTORY_SIZE = 1000


@dataclass(frozen=True)
class MetricSample:
    timestamp: float  # seconds
    value: float  # bytes per second for the bandwidth sensor
    metric: str = "bandwidth"


class Comparator(str, Enum):
    GT = ">"
    GE = ">="
    LT = "<"
    LE = "<="

    def holds(self, value: float, threshold: float) -> bool:
        return _COMPARATORS[self](value, threshold)


_COMPARATORS = {
    Comparator.GT: operator.gt,
    Comparator.GE: operator.ge,
    Comparator.LT: operator.lt,
    Comparator.LE: operator.le,
}


def _always(knowledge, active) -> bool:
    return True


@dataclass(frozen=True)
class EcaRule:
    """
    Fires when a metric crosses into the comparator's region.

    A crossing needs a previous sample that did not satisfy the comparison and a
    current one that does, so a rule fires once per crossing, not once per sample.
    """

    name: str
    metric: str
    comparator: Comparator
    threshold: float
    activate: frozenset = frozenset()
    deactivate: frozenset = frozenset()
    condition: Callable = field(default=_always, compare=False)

    def crossed(self, previous: float, current: float) -> bool:
        return (not self.comparator.holds(previous, self.threshold)
                and self.comparator.holds(current, self.threshold))

    def apply(self, layers: frozenset) -> frozenset:
        return (layers - self.deactivate) | self.activate

    @classmethod
    def from_config(cls, rule: RuleConfig, registry: "Registry") -> "EcaRule":
        try:
            activate = frozenset(registry.layer(n) for n in rule.activate)
            deactivate = frozenset(registry.layer(n) for n in rule.deactivate)
            required = frozenset(registry.layer(n) for n in rule.when_active)
        except UnknownLayerError as e:
            raise ConfigError([f"rules[{rule.name}]: {e}"])
        condition = _always
        if required:
            def condition(knowledge, active):
                return required <= active
        return cls(rule.name, rule.metric, Comparator(rule.op), rule.threshold, activate, deactivate, condition)


@dataclass
class PiController:
    """
    Direct-form PI controller whose output is the fraction of new high-band sessions.

    Error is normalised by the setpoint so the gains are unitless.
    """

    kp: float = 0.8
    ki: float = 0.3  # per second
    setpoint: float = 7.5e6  # bytes per second
    integral: float = 0.0  # error * seconds
    output_min: float = 0.0
    output_max: float = 1.0
    anti_windup: bool = True
    output: Optional[float] = None

    def __post_init__(self):
        if self.output_min > self.output_max:
            raise ControllerError("output_min must not exceed output_max")
        if self.output is None:
            self.output = self.output_max
        self.output = self.clamp(self.output)

    def clamp(self, value: float) -> float:
        return min(max(value, self.output_min), self.output_max)

    def step(self, measured: float, dt: float) -> float:
        if self.setpoint <= 0:
            raise ControllerError(f"setpoint must be positive, got {self.setpoint}")
        if dt <= 0:
            raise ControllerError(f"dt must be positive, got {dt}")
        error = self.setpoint - measured
        candidate = self.integral + error * dt
        raw = (self.kp * error + self.ki * candidate) / self.setpoint
        pushing_high = raw > self.output_max and error > 0
        pushing_low = raw < self.output_min and error < 0
        if self.anti_windup and (pushing_high or pushing_low):
            raw = (self.kp * error + self.ki * self.integral) / self.setpoint
        else:
            self.integral = candidate
        self.output = self.clamp(raw)
        return self.output


def pi_step(controller: PiController, measured: float, dt: float) -> float:
    return controller.step(measured, dt)


@dataclass
class AutonomicKnowledge:
    """The K of MAPE-K: layers, constraints, rules and controller state."""

    registry: "Registry"
    constraints: ConstraintSet
    rules: list = field(default_factory=list)
    controller: Optional[PiController] = None
    setpoint_schedule: list = field(default_factory=list)  # (time s, bytes/s)
    default_layers: frozenset = frozenset()
    session_layers: tuple = ()  # (high set, low set) for session assignment

    def __post_init__(self):
        times = [t for t, _ in self.setpoint_schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError(["setpoints: times must be strictly increasing"])


@dataclass(frozen=True)
class PlanningFailure:
    timestamp: float
    rule: str
    validation: Validation


class AutonomicManager:
    """
    Ingests sensor samples, plans layer sets and serves them to the managed element.

    A single writer calls ingest_sample and update_setpoint; any number of session
    flows read get_active_layers and assign_session_layers concurrently and always
    see a complete layer set.
    """

    def __init__(self, knowledge: AutonomicKnowledge, history_size: int = HISTORY_SIZE,
                 sample_period: float = 1.0):
        self.knowledge = knowledge
        self.sample_period = sample_period
        self.history = deque(maxlen=history_size)
        self.events = deque(maxlen=history_size)
        self.firings = Counter()
        self._last = {}
        self._lock = threading.Lock()

        for rule in knowledge.rules:
            for layer in rule.activate | rule.deactivate:
                knowledge.registry.check_layer(layer)
        for layers in (knowledge.default_layers, *knowledge.session_layers):
            validation = knowledge.constraints.validate(layers)
            if not validation:
                raise ConstraintViolationError(validation, f"configured layer set refused: {validation}")
        self._active = frozenset(knowledge.default_layers)

    @classmethod
    def from_config(cls, app_config: AppConfig, registry: "Registry",
                    fraction: Optional[float] = None) -> "AutonomicManager":
        """
        Build the case-study manager over the high_band and low_band layers.

        Args:
            app_config (AppConfig): controller gains, setpoints and rules
            registry (Registry): registry holding both layers and their constraints
            fraction (float): pin the high-band fraction (non-autonomic runs)

        Returns:
            AutonomicManager: manager ready to be sampled
        """
        high, low = registry.layer(HIGH_BAND), registry.layer(LOW_BAND)
        schedule = [(entry.t, entry.bytes_per_sec) for entry in app_config.setpoints]
        controller = None
        if app_config.mode is Mode.PI or fraction is not None:
            gains = app_config.controller
            bounds = (fraction, fraction) if fraction is not None else (gains.output_min, gains.output_max)
            controller = PiController(
                kp=gains.kp, ki=gains.ki, setpoint=schedule[0][1] if schedule else 1.0,
                output_min=bounds[0], output_max=bounds[1], anti_windup=gains.anti_windup,
            )
        knowledge = AutonomicKnowledge(
            registry=registry,
            constraints=registry.constraints,
            rules=[EcaRule.from_config(rule, registry) for rule in app_config.rules],
            controller=controller,
            setpoint_schedule=schedule,
            default_layers=frozenset({high}),
            session_layers=(frozenset({high}), frozenset({low})),
        )
        return cls(knowledge)

    @property
    def controller(self) -> Optional[PiController]:
        return self.knowledge.controller

    @property
    def setpoint(self) -> Optional[float]:
        return self.controller.setpoint if self.controller else None

    @property
    def fraction(self) -> float:
        """Current probability that a new session is assigned the high-band set."""
        if self.controller is not None:
            return self.controller.output
        high = self.knowledge.session_layers[0] if self.knowledge.session_layers else frozenset()
        return 1.0 if high and high <= self._active else 0.0

    def ingest_sample(self, sample: MetricSample) -> None:
        with self._lock:
            last = self._last.get(sample.metric)
            if last is not None and sample.timestamp < last[0]:
                raise SampleOrderError(
                    f"{sample.metric} sample at {sample.timestamp} is older than {last[0]}")
            self.history.append(sample)
            self._last[sample.metric] = (sample.timestamp, sample.value)
            if last is not None:
                self._analyze(sample, last[1])
            dt = sample.timestamp - last[0] if last is not None else self.sample_period
            if self.controller is not None and sample.metric == "bandwidth" and dt > 0:
                output = self.controller.step(sample.value, dt)
                logger.debug("t=%.1f bandwidth=%.0f setpoint=%.0f fraction=%.3f",
                             sample.timestamp, sample.value, self.controller.setpoint, output)

    def _analyze(self, sample: MetricSample, previous: float) -> None:
        for rule in self.knowledge.rules:
            if rule.metric != sample.metric or not rule.crossed(previous, sample.value):
                continue
            if not rule.condition(self.knowledge, self._active):
                continue
            self.firings[rule.name] += 1
            self._plan(sample.timestamp, rule)

    def _plan(self, timestamp: float, rule: EcaRule) -> None:
        candidate = rule.apply(self._active)
        validation = self.knowledge.constraints.validate(candidate)
        if not validation:
            self.events.append(PlanningFailure(timestamp, rule.name, validation))
            logger.warning("Rule %s refused at t=%.1f: %s; keeping previous layers", rule.name, timestamp, validation)
            return
        self._active = candidate
        logger.info("Rule %s fired at t=%.1f: active layers now %s",
                    rule.name, timestamp, sorted(layer.name for layer in candidate))

    def get_active_layers(self) -> frozenset:
        return self._active

    def assign_session_layers(self, rng) -> frozenset:
        """Pick the layer set stored in a new session; rng needs a random() method."""
        if self.controller is None or not self.knowledge.session_layers:
            return self._active
        high, low = self.knowledge.session_layers
        return high if rng.random() < self.controller.output else low

    def update_setpoint(self, t: float) -> None:
        if self.controller is None:
            return
        current = None
        for time, value in self.knowledge.setpoint_schedule:
            if time > t:
                break
            current = value
        if current is not None and current != self.controller.setpoint:
            logger.info("Setpoint changed to %.0f bytes/s at t=%.1f", current, t)
            self.controller.setpoint = current
