"""Experiment configuration: a YAML tree mapped onto nested dataclasses.

All frequencies are in units of gamma and all times in 1/gamma; every
config file declares this with ``units: gamma``.
"""
from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

__all__ = [
    "ConfigError",
    "AtomParams",
    "ControlParams",
    "MediumParams",
    "PulseParams",
    "ThermalParams",
    "SpectrumParams",
    "MemoryParams",
    "SweepAxis",
    "SweepParams",
    "ExperimentConfig",
    "load_config",
    "list_presets",
    "apply_overrides",
    "dump_config",
]

UNITS = "gamma"
UNITS_NOTE = "frequencies in units of gamma, times in units of 1/gamma"
EXPERIMENTS = ("spectrum", "pulse", "memory", "sweep")
MODELS = ("full", "lambda", "bare")


class ConfigError(ValueError):
    """Invalid or unparsable experiment configuration."""


@dataclass
class AtomParams:
    nuclear_spin: float = 3.5
    hyperfine_splitting: float = 256.0


@dataclass
class ControlParams:
    detuning: float = 0.0
    rabi: float = 15.0


@dataclass
class MediumParams:
    depth: float = 50.0
    density_scale: float = 1.0
    retardation: float = 0.0


@dataclass
class PulseParams:
    """Rectangular signal pulse on a comb of carriers.

    ``carrier_reference`` is ``at_peak`` (offset from the full-model
    Autler-Townes resonance nearest the control detuning) or ``line``
    (offset from the |m>->|n> transition). Mode q sits 2*pi*q/T above
    the central carrier.
    """

    duration: float = 10.0
    carrier_reference: str = "at_peak"
    carrier_offset: float = 0.8
    modes: list = field(default_factory=lambda: [-1, 0, 1])
    samples_per_period: int = 400
    t_before: float = 20.0
    t_after: float = 100.0


@dataclass
class ThermalParams:
    kind: str = "frozen"
    temperature: float = 0.0
    mass: float = 1220.0
    quadrature_order: int = 40
    include_recoil: bool = True


@dataclass
class SpectrumParams:
    """Probe grid; with ``relative`` the grid is offset by the control detuning.

    ``detunings`` lists control detunings to scan in turn; when empty the
    control section's detuning is used.
    """

    start: float = -40.0
    stop: float = 300.0
    points: int = 6801
    relative: bool = False
    models: list = field(default_factory=lambda: list(MODELS))
    detunings: list = field(default_factory=list)
    thermal: ThermalParams = field(default_factory=ThermalParams)


@dataclass
class MemoryParams:
    storage_time: float = 20.0
    directions: list = field(default_factory=lambda: ["backward", "forward"])
    switch_profile: str = "instantaneous"
    ramp_time: float = 0.0
    spin_decay: float = 0.0
    settle_time: float = 10.0
    read_time: float = 100.0
    write_off_time: Optional[float] = None
    nz: int = 100
    dt: float = 0.002


@dataclass
class SweepAxis:
    """One sweep axis: a dotted config path and its explicit values."""

    name: str
    values: list = field(default_factory=list)


@dataclass
class SweepParams:
    measure: str = "memory"
    axes: list = field(default_factory=list)


@dataclass
class ExperimentConfig:
    experiment: str = "spectrum"
    units: str = UNITS
    output_dir: str = "out"
    atom: AtomParams = field(default_factory=AtomParams)
    control: ControlParams = field(default_factory=ControlParams)
    medium: MediumParams = field(default_factory=MediumParams)
    pulse: PulseParams = field(default_factory=PulseParams)
    spectrum: SpectrumParams = field(default_factory=SpectrumParams)
    memory: MemoryParams = field(default_factory=MemoryParams)
    sweep: SweepParams = field(default_factory=SweepParams)

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, data: Any) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        cfg = _build(cls, data, "")
        cfg.validate()
        return cfg

    @property
    def run_kind(self) -> str:
        """Experiment actually evaluated at each point (sweeps delegate)."""
        return self.sweep.measure if self.experiment == "sweep" else self.experiment

    def validate(self) -> None:
        if self.units != UNITS:
            raise ConfigError(f"units must be {UNITS!r} ({UNITS_NOTE}), got {self.units!r}")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.sweep.measure not in EXPERIMENTS[:3]:
            raise ConfigError(f"sweep.measure must be one of {EXPERIMENTS[:3]}, got {self.sweep.measure!r}")
        if len(self.sweep.axes) > 2:
            raise ConfigError("at most two sweep axes are supported")
        names = [a.name for a in self.sweep.axes]
        if len(set(names)) != len(names):
            raise ConfigError("sweep axes must be distinct")
        base = self.to_dict()
        for name in names:
            _lookup(base, name)
        if self.atom.hyperfine_splitting <= 0:
            raise ConfigError("atom.hyperfine_splitting must be positive")
        if _half_int(self.atom.nuclear_spin) is None:
            raise ConfigError("atom.nuclear_spin must be a positive half-integer")
        if self.control.rabi < 0:
            raise ConfigError("control.rabi must be non-negative")
        if self.medium.depth < 0:
            raise ConfigError("medium.depth must be non-negative")
        p = self.pulse
        if p.duration <= 0:
            raise ConfigError("pulse.duration must be positive")
        if p.carrier_reference not in ("at_peak", "line"):
            raise ConfigError("pulse.carrier_reference must be 'at_peak' or 'line'")
        if not p.modes or not all(isinstance(q, int) and not isinstance(q, bool) for q in p.modes):
            raise ConfigError("pulse.modes must be a non-empty list of integers")
        if p.samples_per_period < 8 or p.t_before < 0 or p.t_after < 0:
            raise ConfigError("pulse sampling parameters out of range")
        s = self.spectrum
        if s.points < 2 or not s.stop > s.start:
            raise ConfigError("spectrum grid needs stop > start and at least two points")
        bad = [m for m in s.models if m not in MODELS]
        if bad or not s.models:
            raise ConfigError(f"spectrum.models must be drawn from {MODELS}")
        if s.thermal.kind not in ("frozen", "thermal"):
            raise ConfigError("spectrum.thermal.kind must be 'frozen' or 'thermal'")
        if s.thermal.temperature < 0 or s.thermal.mass <= 0 or s.thermal.quadrature_order < 1:
            raise ConfigError("spectrum.thermal parameters out of range")
        m = self.memory
        if not m.directions or any(d not in ("forward", "backward") for d in m.directions):
            raise ConfigError("memory.directions must list 'forward' and/or 'backward'")
        if m.switch_profile not in ("instantaneous", "linear"):
            raise ConfigError("memory.switch_profile must be 'instantaneous' or 'linear'")
        if m.switch_profile == "linear" and m.ramp_time <= 0:
            raise ConfigError("memory.ramp_time must be positive for a linear switch")
        if m.storage_time < 0 or m.spin_decay < 0 or m.read_time <= 0:
            raise ConfigError("memory timing parameters out of range")
        if m.settle_time < 10.0:
            raise ConfigError("memory.settle_time must be at least 10")
        if m.write_off_time is not None and m.write_off_time < 0:
            raise ConfigError("memory.write_off_time must be non-negative")
        if m.nz < 4 or m.dt <= 0:
            raise ConfigError("memory grid needs nz >= 4 and dt > 0")


def _half_int(x) -> Optional[int]:
    """2*x as an int if x is a positive half-integer, else None."""
    try:
        y = 2 * float(x)
    except (TypeError, ValueError):
        return None
    if y <= 0 or y != int(y):
        return None
    return int(y)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


_FLOAT_FIELDS = {"float", "Optional[float]"}


def _coerce(value, ftype: str, path: str):
    if ftype in _FLOAT_FIELDS:
        if value is None and ftype.startswith("Optional"):
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number, got {value!r}")
        return float(value)
    if ftype == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{path} must be an integer, got {value!r}")
        return int(value)
    if ftype == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be true or false, got {value!r}")
        return value
    if ftype == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string, got {value!r}")
        return value
    if ftype == "list":
        if not isinstance(value, list):
            raise ConfigError(f"{path} must be a list, got {value!r}")
        return list(value)
    raise AssertionError(ftype)


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix.rstrip('.') or 'config'} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(prefix + k for k in unknown)}")
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        path = prefix + name
        sub = _SECTIONS.get((cls.__name__, name))
        if sub is not None:
            kwargs[name] = _build(sub, data[name], path + ".")
        elif cls is SweepParams and name == "axes":
            kwargs[name] = [_axis(a, f"{path}[{i}]") for i, a in enumerate(_coerce(data[name], "list", path))]
        else:
            kwargs[name] = _coerce(data[name], f.type, path)
    if cls is SweepAxis and "name" not in data:
        raise ConfigError(f"{prefix}name is required")
    return cls(**kwargs)


def _axis(spec, path: str) -> SweepAxis:
    if not isinstance(spec, dict):
        raise ConfigError(f"{path} must be a mapping")
    spec = dict(spec)
    if "values" in spec:
        if set(spec) - {"name", "values"}:
            raise ConfigError(f"{path}: give either values or start/stop/count")
        return _build(SweepAxis, spec, path + ".")
    try:
        start, stop, count = spec.pop("start"), spec.pop("stop"), spec.pop("count")
    except KeyError as exc:
        raise ConfigError(f"{path} needs values or start/stop/count") from exc
    count = _coerce(count, "int", path + ".count")
    if count < 0:
        raise ConfigError(f"{path}.count must be non-negative")
    start = _coerce(start, "float", path + ".start")
    stop = _coerce(stop, "float", path + ".stop")
    vals = [float(v) for v in np.linspace(start, stop, count)] if count != 1 else [start]
    spec["values"] = vals
    return _build(SweepAxis, spec, path + ".")


_SECTIONS = {
    ("ExperimentConfig", "atom"): AtomParams,
    ("ExperimentConfig", "control"): ControlParams,
    ("ExperimentConfig", "medium"): MediumParams,
    ("ExperimentConfig", "pulse"): PulseParams,
    ("ExperimentConfig", "spectrum"): SpectrumParams,
    ("ExperimentConfig", "memory"): MemoryParams,
    ("ExperimentConfig", "sweep"): SweepParams,
    ("SpectrumParams", "thermal"): ThermalParams,
}


def _lookup(tree: dict, dotted: str):
    node = tree
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        node = node[part]
    return node


def _assign(tree: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = tree
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config key {dotted!r}")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"unknown config key {dotted!r}")
    node[parts[-1]] = value


def apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    """Return a new config with ``key=value`` (or ``(key, value)``) items applied.

    String values are parsed as YAML scalars, so ``control.rabi=10`` sets a
    number and ``memory.directions=[backward]`` a list.
    """
    tree = copy.deepcopy(cfg.to_dict())
    for item in overrides:
        if isinstance(item, str):
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, raw = item.split("=", 1)
            try:
                value = yaml.safe_load(raw)
            except yaml.YAMLError as exc:
                raise ConfigError(f"cannot parse override value {raw!r}") from exc
            if isinstance(value, str):
                # YAML 1.1 reads forms like 1e9 as strings
                try:
                    value = float(value)
                except ValueError:
                    pass
        else:
            key, value = item
        key = key.strip()
        if key.startswith("sweep.axes"):
            raise ConfigError("sweep axes cannot be overridden individually")
        _assign(tree, key, value)
    return ExperimentConfig.from_dict(tree)


def list_presets() -> list[str]:
    root = resources.files("ramanmem") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_config(source: str) -> ExperimentConfig:
    """Load a preset by name or a YAML file by path."""
    path = Path(source)
    if path.suffix in (".yaml", ".yml") or path.exists():
        if not path.is_file():
            raise ConfigError(f"config file {source!r} not found")
        text = path.read_text()
    else:
        res = resources.files("ramanmem") / "presets" / f"{source}.yaml"
        if not res.is_file():
            raise ConfigError(f"unknown preset {source!r}; available: {', '.join(list_presets())}")
        text = res.read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML parse error: {' '.join(str(exc).split())}") from exc
    return ExperimentConfig.from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    head = f"# {UNITS_NOTE}\n"
    return head + yaml.safe_dump(cfg.to_dict(), sort_keys=False)
