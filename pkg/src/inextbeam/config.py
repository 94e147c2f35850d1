"""Run configuration: dataclass schema, YAML (de)serialization and named presets."""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

SCHEMA_VERSION = 1

INITIAL_PRESETS = ("FirstMode", "SecondMode", "Polynomial", "LinearIV")
INTEGRATORS = ("auto", "adaptive-explicit", "implicit-second-order")


class ConfigError(ValueError):
    pass


@dataclass
class Physical:
    D: float = 1.0
    L: float = 1.0
    beta: float = 1.0
    U: float = 0.0
    k0: float = 0.0
    k2: float = 0.0
    sigma: int = 1
    iota: int = 1
    # static pressure p0(x) as a table {"x": [...], "p": [...]}; None means p0 = 0
    p0: dict | None = None

    def validate(self):
        if self.D <= 0 or self.L <= 0:
            raise ConfigError("D and L must be positive")
        if self.beta < 0 or self.k0 < 0 or self.k2 < 0:
            raise ConfigError("beta, k0 and k2 must be non-negative")
        if self.sigma not in (0, 1) or self.iota not in (0, 1):
            raise ConfigError("sigma and iota are flags in {0, 1}")
        if self.p0 is not None:
            if set(self.p0) != {"x", "p"} or len(self.p0["x"]) != len(self.p0["p"]) or len(self.p0["x"]) < 2:
                raise ConfigError("p0 must be a table with equal-length 'x' and 'p' lists")


@dataclass
class Numerical:
    N: int = 6
    t_end: float = 20.0
    dt_init: float = 1e-4
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    integrator: str = "auto"
    quad_rule: str = "simpson"
    quad_points: int = 4096
    guard: float = 1e6
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    min_step: float = 1e-12

    def validate(self):
        if self.N < 1:
            raise ConfigError("N must be at least 1")
        if self.t_end < 0:
            raise ConfigError("t_end must be non-negative")
        if min(self.dt_init, self.rel_tol, self.abs_tol, self.newton_tol, self.min_step) <= 0:
            raise ConfigError("step sizes and tolerances must be positive")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}")
        if self.guard <= 0:
            raise ConfigError("guard must be positive")


@dataclass
class InitialData:
    preset: str = "LinearIV"
    a: float = 1.0
    # overall multiplier on both w0 and w1
    scale: float = 1.0

    def validate(self):
        if self.preset not in INITIAL_PRESETS:
            raise ConfigError(f"initial preset must be one of {INITIAL_PRESETS}")
        if self.preset == "LinearIV" and self.a <= 0:
            raise ConfigError("LinearIV needs a > 0")


@dataclass
class Output:
    dt: float = 0.01
    trajectory: str = "trajectory.csv"
    summary: str = "summary.json"
    manifest: str = "manifest.json"

    def validate(self):
        if self.dt <= 0:
            raise ConfigError("output dt must be positive")


@dataclass
class SweepSpec:
    param: str = "U"
    values: list = field(default_factory=list)
    output: str = "sweep.csv"


@dataclass
class SimConfig:
    physical: Physical = field(default_factory=Physical)
    numerical: Numerical = field(default_factory=Numerical)
    initial: InitialData = field(default_factory=InitialData)
    output: Output = field(default_factory=Output)
    sweep: SweepSpec | None = None
    name: str = ""
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> "SimConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        for part in (self.physical, self.numerical, self.initial, self.output):
            part.validate()
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["sweep"] is None:
            del d["sweep"]
        return d

    def replace(self, **changes) -> "SimConfig":
        """Copy with dotted-path overrides, e.g. ``replace(**{"physical.U": 140})``."""
        new = copy.deepcopy(self)
        for path, value in changes.items():
            set_path(new, path, value)
        return new.validate()


_SECTIONS = {"physical": Physical, "numerical": Numerical, "initial": InitialData, "output": Output, "sweep": SweepSpec}

# short names accepted wherever a parameter path is expected
ALIASES = {
    "U": "physical.U", "beta": "physical.beta", "D": "physical.D", "L": "physical.L",
    "k0": "physical.k0", "k2": "physical.k2", "sigma": "physical.sigma", "iota": "physical.iota",
    "N": "numerical.N", "t_end": "numerical.t_end", "a": "initial.a", "preset": "initial.preset",
}


def _coerce(cls, key: str, value):
    types = {f.name: f.type for f in fields(cls)}
    if key not in types:
        raise ConfigError(f"unknown key {cls.__name__.lower()}.{key}")
    t = types[key]
    if t == "float":
        return float(value)
    if t == "int":
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{key} must be an integer")
        return int(value)
    if t == "str":
        return str(value)
    return value


def set_path(cfg: SimConfig, path: str, value) -> None:
    path = ALIASES.get(path, path)
    section, _, key = path.partition(".")
    if not key or section not in _SECTIONS or section == "sweep":
        raise ConfigError(f"cannot set {path!r}")
    obj = getattr(cfg, section)
    setattr(obj, key, _coerce(type(obj), key, value))


def from_dict(data: dict[str, Any]) -> SimConfig:
    data = dict(data or {})
    kwargs: dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        raw = data.pop(name, None)
        if raw is None:
            continue
        if not isinstance(raw, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        kwargs[name] = cls(**{k: _coerce(cls, k, v) for k, v in raw.items()})
    for key in ("name", "schema_version"):
        if key in data:
            kwargs[key] = data.pop(key)
    if data:
        raise ConfigError(f"unknown top-level keys: {sorted(data)}")
    return SimConfig(**kwargs).validate()


def dumps(cfg: SimConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def loads(text: str) -> SimConfig:
    return from_dict(yaml.safe_load(text) or {})


def load(path: str | Path) -> SimConfig:
    return loads(Path(path).read_text())


def preset_names() -> list[str]:
    root = resources.files("inextbeam") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> SimConfig:
    path = resources.files("inextbeam") / "presets" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return loads(path.read_text())
