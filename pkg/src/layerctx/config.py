import json
import os
from dataclasses import asdict, dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from dotenv import load_dotenv

from .errors import ConfigError

# Load environment variables from .env file
load_dotenv()


class Config:
    """Environment settings for the layerctx command line."""

    @property
    def LOG_LEVEL(self) -> str:
        return os.getenv("LAYERCTX_LOG_LEVEL", "INFO").upper()

    @property
    def OUTPUT_DIR(self) -> str:
        return os.getenv("LAYERCTX_OUTPUT_DIR", "out")

    @property
    def CONFIG_PATH(self) -> Optional[str]:
        return os.getenv("LAYERCTX_CONFIG") or None

    @property
    def SEED(self) -> Optional[int]:
        """Seed fallback used when no --seed flag is given."""
        raw = os.getenv("LAYERCTX_SEED")
        if raw is None or raw.strip() == "":
            return None
        try:
            seed = int(raw)
        except ValueError:
            raise ConfigError([f"LAYERCTX_SEED: expected an integer, got {raw!r}"])
        if seed < 0:
            raise ConfigError([f"LAYERCTX_SEED: must be >= 0, got {seed}"])
        return seed


# Create a global configuration instance
config = Config()


HIGH_BAND = "high_band"
LOW_BAND = "low_band"


class Granularity(str, Enum):
    """How often the context manager is queried for a layer set."""

    SESSION = "session"
    PAGE = "page"
    COMPONENT = "component"


class Mode(str, Enum):
    PI = "pi"
    ECA = "eca"


@dataclass(frozen=True)
class VariantBytes:
    high: int
    low: int


@dataclass(frozen=True)
class PageModel:
    """Home chrome plus first-level components, each holding second-level components."""

    first_level: int = 4
    second_level: int = 2
    home: VariantBytes = VariantBytes(high=2_000, low=800)
    first_level_bytes: VariantBytes = VariantBytes(high=6_000, low=2_400)
    second_level_bytes: VariantBytes = VariantBytes(high=3_000, low=1_200)

    def page_bytes(self, variant: str) -> int:
        """Bytes of a whole page rendered uniformly in one variant."""
        pick = (lambda v: v.high) if variant == HIGH_BAND else (lambda v: v.low)
        per_first = pick(self.first_level_bytes) + self.second_level * pick(self.second_level_bytes)
        return pick(self.home) + self.first_level * per_first

    @property
    def high_bytes(self) -> int:
        return self.page_bytes(HIGH_BAND)

    @property
    def low_bytes(self) -> int:
        return self.page_bytes(LOW_BAND)


@dataclass(frozen=True)
class SimulationConfig:
    n_users: int = 200
    ramp_interval: float = 200.0  # seconds
    pages_per_session: int = 5
    inter_request_delay: float = 1.0  # seconds
    duration: float = 800.0  # seconds
    measurement_window: float = 1.0  # seconds
    seed: int = 0
    granularity: Granularity = Granularity.SESSION
    jitter: float = 0.0  # max extra think time, seconds
    page: PageModel = PageModel()

    @property
    def pages_per_second(self) -> float:
        """Steady-state request rate once every user is active."""
        return self.n_users / self.inter_request_delay

    def steady_state_bandwidth(self, variant: str) -> float:
        """Closed-form throughput of a run pinned to one variant, bytes per second."""
        return self.pages_per_second * self.page.page_bytes(variant)

    def problems(self) -> list:
        """Invariant breaches of a programmatically built config (empty when valid)."""
        found = []
        for name in ("n_users", "pages_per_session", "ramp_interval", "inter_request_delay",
                     "duration", "measurement_window"):
            if getattr(self, name) <= 0:
                found.append(f"simulation.{name}: must be > 0")
        if self.jitter < 0:
            found.append("simulation.jitter: must be >= 0")
        if self.page.first_level <= 0 or self.page.second_level < 0:
            found.append("simulation.page: component counts must be positive")
        for name in ("home", "first_level_bytes", "second_level_bytes"):
            variant = getattr(self.page, name)
            if variant.low <= 0 or variant.high <= variant.low:
                found.append(f"simulation.page.{name}: need high > low > 0")
        return found


@dataclass(frozen=True)
class ControllerConfig:
    kp: float = 0.8
    ki: float = 0.3  # per second
    output_min: float = 0.0
    output_max: float = 1.0
    anti_windup: bool = True


@dataclass(frozen=True)
class SetpointEntry:
    t: float
    bytes_per_sec: float


@dataclass(frozen=True)
class RuleConfig:
    metric: str
    op: str
    threshold: float
    activate: tuple = ()
    deactivate: tuple = ()
    name: str = ""
    when_active: tuple = ()


@dataclass(frozen=True)
class ConstraintsConfig:
    excludes: tuple = ((HIGH_BAND, LOW_BAND),)
    requires: tuple = ()


@dataclass(frozen=True)
class DemoConfig:
    response_time_threshold: float = 0.5  # seconds


@dataclass(frozen=True)
class StressConfig:
    threads: int = 8
    sessions_per_thread: int = 50
    loop_interval: float = 0.05  # seconds between live controller ticks


DEFAULT_SETPOINTS = (
    SetpointEntry(0.0, 7.5e6),
    SetpointEntry(400.0, 9.0e6),
    SetpointEntry(600.0, 5.0e6),
)

DEFAULT_RULES = (
    RuleConfig(name="high-to-low", metric="bandwidth", op=">", threshold=8.0e6,
               activate=(LOW_BAND,), deactivate=(HIGH_BAND,)),
    RuleConfig(name="low-to-high", metric="bandwidth", op="<", threshold=6.0e6,
               activate=(HIGH_BAND,), deactivate=(LOW_BAND,)),
)


@dataclass(frozen=True)
class AppConfig:
    """Everything a simulate, demo or bench run reads from the JSON config."""

    simulation: SimulationConfig = SimulationConfig()
    controller: ControllerConfig = ControllerConfig()
    mode: Mode = Mode.PI
    setpoints: tuple = DEFAULT_SETPOINTS
    rules: tuple = DEFAULT_RULES
    constraints: ConstraintsConfig = ConstraintsConfig()
    demo: DemoConfig = DemoConfig()
    stress: StressConfig = StressConfig()

    def with_seed(self, seed: int) -> "AppConfig":
        return replace(self, simulation=replace(self.simulation, seed=seed))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mode"] = self.mode.value
        data["simulation"]["granularity"] = self.simulation.granularity.value
        return json.loads(json.dumps(data))


class _Reader:
    """Collects field-level diagnostics while reading one JSON object."""

    def __init__(self, data: Any, path: str, errors: list):
        self.path = path
        self.errors = errors
        if data is None:
            data = {}
        if not isinstance(data, dict):
            errors.append(f"{path}: expected an object")
            data = {}
        self.data = data

    def check_unknown(self, known):
        for key in self.data:
            if key not in known:
                self.errors.append(f"{self.path}.{key}: unknown field")

    def number(self, key, default, *, integer=False, positive=False, minimum=None, maximum=None):
        if key not in self.data:
            return default
        value = self.data[key]
        where = f"{self.path}.{key}"
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.errors.append(f"{where}: expected a number, got {value!r}")
            return default
        if integer and int(value) != value:
            self.errors.append(f"{where}: expected an integer, got {value!r}")
            return default
        if positive and value <= 0:
            self.errors.append(f"{where}: must be > 0, got {value!r}")
        if minimum is not None and value < minimum:
            self.errors.append(f"{where}: must be >= {minimum}, got {value!r}")
        if maximum is not None and value > maximum:
            self.errors.append(f"{where}: must be <= {maximum}, got {value!r}")
        return int(value) if integer else float(value)

    def boolean(self, key, default):
        value = self.data.get(key, default)
        if not isinstance(value, bool):
            self.errors.append(f"{self.path}.{key}: expected true or false, got {value!r}")
            return default
        return value

    def string(self, key, default, choices=None):
        value = self.data.get(key, default)
        if not isinstance(value, str):
            self.errors.append(f"{self.path}.{key}: expected a string, got {value!r}")
            return default
        if choices is not None and value not in choices:
            self.errors.append(f"{self.path}.{key}: expected one of {sorted(choices)}, got {value!r}")
            return default
        return value

    def names(self, key, default=()):
        value = self.data.get(key, list(default))
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            self.errors.append(f"{self.path}.{key}: expected a list of layer names")
            return tuple(default)
        return tuple(value)

    def sub(self, key):
        return _Reader(self.data.get(key), f"{self.path}.{key}", self.errors)


def _variant(reader: _Reader, default: VariantBytes) -> VariantBytes:
    reader.check_unknown({"high", "low"})
    high = reader.number("high", default.high, integer=True, positive=True)
    low = reader.number("low", default.low, integer=True, positive=True)
    if high <= low:
        reader.errors.append(f"{reader.path}: high bytes ({high}) must exceed low bytes ({low})")
    return VariantBytes(high=high, low=low)


def _page(reader: _Reader) -> PageModel:
    reader.check_unknown({"first_level", "second_level", "home", "first_level_bytes", "second_level_bytes"})
    default = PageModel()
    return PageModel(
        first_level=reader.number("first_level", default.first_level, integer=True, positive=True),
        second_level=reader.number("second_level", default.second_level, integer=True, minimum=0),
        home=_variant(reader.sub("home"), default.home),
        first_level_bytes=_variant(reader.sub("first_level_bytes"), default.first_level_bytes),
        second_level_bytes=_variant(reader.sub("second_level_bytes"), default.second_level_bytes),
    )


def _simulation(reader: _Reader) -> SimulationConfig:
    reader.check_unknown({
        "n_users", "ramp_interval", "pages_per_session", "inter_request_delay", "duration",
        "measurement_window", "seed", "granularity", "jitter", "page",
    })
    d = SimulationConfig()
    return SimulationConfig(
        n_users=reader.number("n_users", d.n_users, integer=True, positive=True),
        ramp_interval=reader.number("ramp_interval", d.ramp_interval, positive=True),
        pages_per_session=reader.number("pages_per_session", d.pages_per_session, integer=True, positive=True),
        inter_request_delay=reader.number("inter_request_delay", d.inter_request_delay, positive=True),
        duration=reader.number("duration", d.duration, positive=True),
        measurement_window=reader.number("measurement_window", d.measurement_window, positive=True),
        seed=reader.number("seed", d.seed, integer=True, minimum=0),
        granularity=Granularity(reader.string("granularity", d.granularity.value,
                                              {g.value for g in Granularity})),
        jitter=reader.number("jitter", d.jitter, minimum=0),
        page=_page(reader.sub("page")),
    )


def _controller(reader: _Reader) -> ControllerConfig:
    reader.check_unknown({"kp", "ki", "output_min", "output_max", "anti_windup"})
    d = ControllerConfig()
    result = ControllerConfig(
        kp=reader.number("kp", d.kp, minimum=0),
        ki=reader.number("ki", d.ki, minimum=0),
        output_min=reader.number("output_min", d.output_min, minimum=0, maximum=1),
        output_max=reader.number("output_max", d.output_max, minimum=0, maximum=1),
        anti_windup=reader.boolean("anti_windup", d.anti_windup),
    )
    if result.output_min > result.output_max:
        reader.errors.append(f"{reader.path}: output_min must not exceed output_max")
    return result


def _setpoints(value: Any, errors: list) -> tuple:
    if value is None:
        return DEFAULT_SETPOINTS
    if not isinstance(value, list) or not value:
        errors.append("setpoints: expected a non-empty list of {t, bytes_per_sec}")
        return DEFAULT_SETPOINTS
    entries = []
    for i, item in enumerate(value):
        reader = _Reader(item, f"setpoints[{i}]", errors)
        reader.check_unknown({"t", "bytes_per_sec"})
        entries.append(SetpointEntry(
            t=reader.number("t", 0.0, minimum=0),
            bytes_per_sec=reader.number("bytes_per_sec", 1.0, positive=True),
        ))
    for prev, cur in zip(entries, entries[1:]):
        if cur.t <= prev.t:
            errors.append(f"setpoints: times must be strictly increasing ({prev.t} then {cur.t})")
    return tuple(entries)


def _rules(value: Any, errors: list) -> tuple:
    if value is None:
        return DEFAULT_RULES
    if not isinstance(value, list):
        errors.append("rules: expected a list")
        return DEFAULT_RULES
    rules = []
    for i, item in enumerate(value):
        reader = _Reader(item, f"rules[{i}]", errors)
        reader.check_unknown({"name", "metric", "op", "threshold", "activate", "deactivate", "when_active"})
        rules.append(RuleConfig(
            name=reader.string("name", f"rule-{i}"),
            metric=reader.string("metric", "bandwidth"),
            op=reader.string("op", ">", {">", ">=", "<", "<="}),
            threshold=reader.number("threshold", 0.0),
            activate=reader.names("activate"),
            deactivate=reader.names("deactivate"),
            when_active=reader.names("when_active"),
        ))
    return tuple(rules)


def _pairs(reader: _Reader, key: str, default: tuple) -> tuple:
    value = reader.data.get(key)
    if value is None:
        return default
    if not isinstance(value, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(n, str) for n in p) for p in value
    ):
        reader.errors.append(f"{reader.path}.{key}: expected a list of [layer, layer] pairs")
        return default
    return tuple(tuple(p) for p in value)


def app_config_from_dict(data: Any) -> AppConfig:
    """Build and validate an AppConfig; raises ConfigError listing every problem."""
    errors: list = []
    root = _Reader(data, "config", errors)
    root.check_unknown({"simulation", "controller", "mode", "setpoints", "rules", "constraints", "demo", "stress"})

    constraints = root.sub("constraints")
    constraints.check_unknown({"excludes", "requires"})
    demo = root.sub("demo")
    demo.check_unknown({"response_time_threshold"})
    stress = root.sub("stress")
    stress.check_unknown({"threads", "sessions_per_thread", "loop_interval"})

    result = AppConfig(
        simulation=_simulation(root.sub("simulation")),
        controller=_controller(root.sub("controller")),
        mode=Mode(root.string("mode", Mode.PI.value, {m.value for m in Mode})),
        setpoints=_setpoints(root.data.get("setpoints"), errors),
        rules=_rules(root.data.get("rules"), errors),
        constraints=ConstraintsConfig(
            excludes=_pairs(constraints, "excludes", ConstraintsConfig().excludes),
            requires=_pairs(constraints, "requires", ()),
        ),
        demo=DemoConfig(
            response_time_threshold=demo.number("response_time_threshold", 0.5, positive=True),
        ),
        stress=StressConfig(
            threads=stress.number("threads", 8, integer=True, positive=True),
            sessions_per_thread=stress.number("sessions_per_thread", 50, integer=True, positive=True),
            loop_interval=stress.number("loop_interval", 0.05, positive=True),
        ),
    )
    if errors:
        raise ConfigError(errors)
    return result


def load_app_config(path: Optional[str] = None) -> AppConfig:
    """
    Load the JSON configuration.

    Args:
        path (str): JSON file; falls back to LAYERCTX_CONFIG, then to built-in defaults

    Returns:
        AppConfig: validated configuration
    """
    path = path or config.CONFIG_PATH
    if path is None:
        return AppConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError([f"{path}: no such file"])
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path}: invalid JSON ({e})"])
    return app_config_from_dict(data)
