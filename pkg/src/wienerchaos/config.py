"""Scenario configuration: TOML schema, validation and round-trip serialization.

Every section and key is optional except ``scenario``. Unknown keys are
rejected and validation errors name the offending key path.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any

import tomli
import tomli_w

SCENARIOS = ("heat-advection", "passive-scalar", "kv-check", "custom")
INITIAL_KINDS = ("sin", "cos", "box", "gaussian")
WEIGHT_MODES = ("ones", "uniform", "explicit", "suggest")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted key path."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class EquationConfig:
    # heat-advection: du = a^2 u_xx dt + sigma u_x dw
    a: float = 1.0
    # heat-advection / kv-check: scalar or d x K nested list; passive-scalar: velocity amplitude(s)
    sigma: Any = 1.0
    # passive-scalar viscosity
    nu: float = 0.5
    # custom scenario only
    diffusion: Any = 1.0
    drift: Any = 0.0
    potential: float = 0.0
    noise_potential: Any = 0.0
    forcing: float | None = None
    noise_forcing: Any = None
    form: str = "nondivergence"


@dataclass(frozen=True)
class InitialConfig:
    kind: str = "sin"
    kappa: int = 1
    width: float = 1.0


@dataclass(frozen=True)
class TruncationConfig:
    I: int = 8
    K: int = 1
    N: int = 4


@dataclass(frozen=True)
class GridConfig:
    d: int = 1
    L: float = 2 * math.pi
    n: int = 128


@dataclass(frozen=True)
class TimeConfig:
    T: float = 0.5
    M: int = 256
    theta: float = 0.5
    t_eval: float | None = None  # evaluation time for pathwise checks; defaults to T


@dataclass(frozen=True)
class WeightsConfig:
    mode: str = "ones"
    value: float = 1.0
    q: tuple[float, ...] = ()
    epsilon: float = 0.5


@dataclass(frozen=True)
class OracleConfig:
    paths: int = 10_000
    seed: int = 42
    probes: int = 16
    samples: int = 100
    h_modes: tuple[tuple[float, ...], ...] = ((0.0,), (0.3,))  # h_k = sum_i h_modes[i][k] m_i


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    equation: EquationConfig = field(default_factory=EquationConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    truncation: TruncationConfig = field(default_factory=TruncationConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    weights: WeightsConfig = field(default_factory=WeightsConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        """Plain nested dict with None entries dropped (TOML has no null)."""
        return _drop_none(asdict(self))

    def digest(self) -> str:
        return hashlib.sha256(serialize(self).encode()).hexdigest()

    def with_overrides(self, *, seed: int | None = None, order: int | None = None,
                       paths: int | None = None, out: str | None = None) -> ScenarioConfig:
        cfg = self
        if seed is not None:
            cfg = replace(cfg, oracle=replace(cfg.oracle, seed=seed))
        if paths is not None:
            cfg = replace(cfg, oracle=replace(cfg.oracle, paths=paths))
        if order is not None:
            cfg = replace(cfg, truncation=replace(cfg.truncation, N=order))
        if out is not None:
            cfg = replace(cfg, output=replace(cfg.output, dir=out))
        validate(cfg)
        return cfg


_SECTIONS = {f.name: f.type for f in fields(ScenarioConfig) if f.name != "scenario"}
_SECTION_CLASSES = {
    "equation": EquationConfig, "initial": InitialConfig, "truncation": TruncationConfig, "grid": GridConfig,
    "time": TimeConfig, "weights": WeightsConfig, "oracle": OracleConfig, "output": OutputConfig,
}


def _drop_none(obj):
    if isinstance(obj, dict):
        return {k: _drop_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_drop_none(v) for v in obj]
    return obj


def _number(key: str, value, *, integer: bool = False) -> float | int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return float(value)


def _numeric_tree(key: str, value):
    """Scalar or (nested) list of numbers."""
    if isinstance(value, (list, tuple)):
        return tuple(_numeric_tree(f"{key}[{i}]", v) for i, v in enumerate(value))
    return _number(key, value)


_INT_KEYS = {"initial.kappa", "truncation.I", "truncation.K", "truncation.N", "grid.d", "grid.n", "time.M",
             "oracle.paths", "oracle.seed", "oracle.probes", "oracle.samples"}
_STR_KEYS = {"equation.form", "initial.kind", "weights.mode", "output.dir"}
_TREE_KEYS = {"equation.sigma", "equation.diffusion", "equation.drift", "equation.noise_potential",
              "equation.noise_forcing", "weights.q", "oracle.h_modes"}


def _build_section(name: str, raw) -> Any:
    cls = _SECTION_CLASSES[name]
    if not isinstance(raw, dict):
        raise ConfigError(name, "expected a table")
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        path = f"{name}.{key}"
        if key not in known:
            raise ConfigError(path, "unknown key")
        if path in _STR_KEYS:
            if not isinstance(value, str):
                raise ConfigError(path, f"expected a string, got {value!r}")
            kwargs[key] = value
        elif path in _INT_KEYS:
            kwargs[key] = _number(path, value, integer=True)
        elif path in _TREE_KEYS:
            kwargs[key] = _numeric_tree(path, value)
        else:
            kwargs[key] = _number(path, value)
    return cls(**kwargs)


def from_dict(data: dict) -> ScenarioConfig:
    if not data:
        raise ConfigError("scenario", "configuration is empty")
    for key in data:
        if key != "scenario" and key not in _SECTIONS:
            raise ConfigError(key, "unknown key")
    if "scenario" not in data:
        raise ConfigError("scenario", "missing required key")
    if not isinstance(data["scenario"], str):
        raise ConfigError("scenario", "expected a string")
    sections = {name: _build_section(name, raw) for name, raw in data.items() if name != "scenario"}
    cfg = ScenarioConfig(scenario=data["scenario"], **sections)
    validate(cfg)
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate TOML text, applying defaults."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("<toml>", str(exc)) from None
    return from_dict(data)


def load_config(path) -> ScenarioConfig:
    with open(path, "rb") as fh:
        try:
            data = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError("<toml>", str(exc)) from None
    return from_dict(data)


def serialize(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def _shape(value) -> tuple[int, ...]:
    if isinstance(value, tuple):
        inner = {_shape(v) for v in value}
        if len(inner) != 1:
            raise ValueError("ragged")
        return (len(value),) + inner.pop()
    return ()


def _require(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(key, message)


def validate(cfg: ScenarioConfig) -> None:
    _require(cfg.scenario in SCENARIOS, "scenario", f"unknown scenario {cfg.scenario!r}; choose from {SCENARIOS}")
    tr, gr, tm, w, oc, eq, ic = cfg.truncation, cfg.grid, cfg.time, cfg.weights, cfg.oracle, cfg.equation, cfg.initial
    for key, value in (("truncation.I", tr.I), ("truncation.K", tr.K), ("grid.n", gr.n), ("time.M", tm.M),
                       ("oracle.probes", oc.probes), ("oracle.samples", oc.samples), ("initial.kappa", ic.kappa)):
        _require(value >= 1, key, f"must be positive, got {value}")
    _require(tr.N >= 0, "truncation.N", f"must be nonnegative, got {tr.N}")
    _require(oc.paths >= 0, "oracle.paths", f"must be nonnegative, got {oc.paths}")
    _require(oc.seed >= 0, "oracle.seed", f"must be nonnegative, got {oc.seed}")
    _require(gr.d in (1, 2), "grid.d", f"only 1 or 2 dimensions, got {gr.d}")
    _require(gr.L > 0, "grid.L", "must be positive")
    _require(tm.T > 0, "time.T", "must be positive")
    _require(0.0 <= tm.theta <= 1.0, "time.theta", "must lie in [0, 1]")
    if tm.t_eval is not None:
        _require(0.0 < tm.t_eval <= tm.T, "time.t_eval", "must lie in (0, T]")
        m = tm.t_eval / (tm.T / tm.M)
        _require(abs(m - round(m)) < 1e-9, "time.t_eval", "must be a node of the time grid")
    _require(ic.kind in INITIAL_KINDS, "initial.kind", f"unknown profile {ic.kind!r}; choose from {INITIAL_KINDS}")
    _require(ic.width > 0, "initial.width", "must be positive")
    _require(w.mode in WEIGHT_MODES, "weights.mode", f"unknown mode {w.mode!r}; choose from {WEIGHT_MODES}")
    _require(w.value > 0, "weights.value", "must be positive")
    _require(0.0 < w.epsilon < 1.0, "weights.epsilon", "must lie in (0, 1)")
    if w.mode == "explicit":
        _require(len(w.q) == tr.K, "weights.q", f"need {tr.K} entries for explicit weights")
        _require(all(isinstance(v, float) and v > 0 for v in w.q), "weights.q", "entries must be positive numbers")
    _require(eq.form in ("divergence", "nondivergence"), "equation.form", f"unknown form {eq.form!r}")
    try:
        hs = _shape(oc.h_modes)
    except ValueError:
        raise ConfigError("oracle.h_modes", "rows must have equal length") from None
    _require(len(hs) == 2 and hs[1] == tr.K, "oracle.h_modes", f"expected rows of {tr.K} numbers")
    _require(hs[0] <= tr.I, "oracle.h_modes", f"at most I={tr.I} rows")
    _require(eq.a > 0, "equation.a", "must be positive")
    _require(eq.nu >= 0, "equation.nu", f"viscosity must be nonnegative, got {eq.nu}")
    sig_shape = _shape(eq.sigma) if isinstance(eq.sigma, tuple) else ()
    _require(sig_shape in ((), (gr.d, tr.K)), "equation.sigma", f"expected a number or a {gr.d} x {tr.K} array")
    if cfg.scenario == "heat-advection":
        _require(gr.d == 1 and tr.K == 1, "grid.d", "heat-advection is one-dimensional with one channel")
        _require(sig_shape == (), "equation.sigma", "heat-advection takes a scalar sigma")
    if cfg.scenario == "passive-scalar":
        # constant velocity fields are divergence free; only constant profiles are offered
        _require(eq.nu > 0, "equation.nu", "passive-scalar needs a positive viscosity")
    if cfg.scenario == "kv-check":
        _require(ic.kind in ("sin", "cos", "gaussian"), "initial.kind", "kv-check needs a smooth initial profile")
