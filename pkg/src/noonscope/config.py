"""
Experiment configuration: one JSON document, parsed strictly.

Every section maps onto a dataclass below; unknown keys abort before any
computation. ``--set section.key=value`` overrides are applied on the raw
dictionary, values are parsed as JSON when possible and as strings otherwise.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .interference import InterferenceModel, PhotonBudget
from .optics import DEFAULT_INDEX, DEFAULT_WAVELENGTH_NM, BeamGeometry, MaterialModel

BUNDLED_Q_RELIEF = "bundled:q_relief"


@dataclass
class ProbeConfig:
    n_photons: int
    visibility: float
    bias_phase: float
    total_photons: float = 920.0  # N k per scan position

    def model(self) -> InterferenceModel:
        return InterferenceModel(self.n_photons, self.visibility, self.bias_phase)

    def budget(self, total_photons: float | None = None) -> PhotonBudget:
        total = self.total_photons if total_photons is None else total_photons
        return PhotonBudget.from_total(total, self.n_photons)


@dataclass
class GeometryConfig:
    sigma_um: float = 11.25
    separation_um: float = 45.0

    def build(self) -> BeamGeometry:
        return BeamGeometry(self.sigma_um, self.separation_um)


@dataclass
class MaterialConfig:
    refractive_index: float = DEFAULT_INDEX
    wavelength_nm: float = DEFAULT_WAVELENGTH_NM
    passes: int = 1

    def build(self) -> MaterialModel:
        return MaterialModel(self.refractive_index, self.wavelength_nm, self.passes)


@dataclass
class SampleConfig:
    mode: str = "step1d"  # or "heightmap2d"
    step_height_nm: float = 17.3
    step_phase_rad: float | None = None  # overrides step_height_nm when set
    step_position_um: float = 0.0
    heightmap: str = BUNDLED_Q_RELIEF  # text grid path or the bundled map
    pitch_um: float = 5.0
    axis: str = "x"
    stride: int = 1


@dataclass
class ScanRangeConfig:
    start_um: float = -150.0
    stop_um: float = 150.0
    step_um: float = 0.5


@dataclass
class FringeConfig:
    points: int = 64
    k_per_point: float = 1000.0
    phase_max: float = 6.283185307179586


@dataclass
class SweepConfig:
    points: int = 12
    seeds_per_point: int = 100
    quantum_total_photons: float = 1150.0
    classical_total_photons: float = 1299.0
    step_phase_rad: float = 0.0626


@dataclass
class AnalysisConfig:
    background_threshold: float = 0.05
    ensemble_seeds: int = 200
    snr_step_phase_rad: float = 0.0626  # step phase used for the SNR reproduction


@dataclass
class ExperimentConfig:
    probe: str = "quantum"
    quantum: ProbeConfig = field(default_factory=lambda: ProbeConfig(2, 0.952, 0.41, 920.0))
    classical: ProbeConfig = field(default_factory=lambda: ProbeConfig(1, 0.971, 0.66, 920.0))
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    material: MaterialConfig = field(default_factory=MaterialConfig)
    sample: SampleConfig = field(default_factory=SampleConfig)
    scan: ScanRangeConfig = field(default_factory=ScanRangeConfig)
    fringe: FringeConfig = field(default_factory=FringeConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    seed: int = 20140212
    threads: int = 0  # 0 means all cores
    out: str = "out"

    def selected_probe(self) -> ProbeConfig:
        return getattr(self, self.probe)

    def validate(self) -> "ExperimentConfig":
        if self.probe not in ("quantum", "classical"):
            raise ConfigError(f"probe must be 'quantum' or 'classical', got {self.probe!r}")
        if self.sample.mode not in ("step1d", "heightmap2d"):
            raise ConfigError(f"sample.mode must be 'step1d' or 'heightmap2d', got {self.sample.mode!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.scan.step_um <= 0 or self.scan.stop_um <= self.scan.start_um:
            raise ConfigError("scan range must have start < stop and step > 0")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0")
        try:
            for p in (self.quantum, self.classical):
                p.model()
                p.budget()
            self.geometry.build()
            self.material.build()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """Hash of everything that affects results (not output dir or thread count)."""
        d = self.as_dict()
        d.pop("out")
        d.pop("threads")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _coerce(value, tp, where):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        tp = next(a for a in args if a is not type(None))
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
        return _build(tp, value, where)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{where}: unsupported type {tp}")


def _build(cls, data: dict, where: str = ""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join((where + '.' if where else '') + k for k in unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        key = f"{where}.{f.name}" if where else f.name
        if f.name in data:
            kwargs[f.name] = _coerce(data[f.name], hints[f.name], key)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from None


def _check_keys(cls, data: dict, where: str = ""):
    hints = typing.get_type_hints(cls)
    for key, value in data.items():
        full = f"{where}.{key}" if where else key
        if key not in hints:
            raise ConfigError(f"unknown config key: {full}")
        if dataclasses.is_dataclass(hints[key]) and isinstance(value, dict):
            _check_keys(hints[key], value, full)


def parse_override(text: str) -> tuple[list[str], object]:
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"--set expects KEY=VALUE, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def _merge(base: dict, path: list[str], value):
    node = base
    for part in path[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config key: {'.'.join(path)}")
        node = node[part]
    if path[-1] not in node:
        raise ConfigError(f"unknown config key: {'.'.join(path)}")
    node[path[-1]] = value


def load_config(path=None, overrides=(), seed=None, out=None, threads=None) -> ExperimentConfig:
    """Defaults, then the JSON file, then ``--set`` overrides, then dedicated flags."""
    raw = ExperimentConfig().as_dict()
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be an object")
        _check_keys(ExperimentConfig, user)
        _deep_update(raw, user)
    for text in overrides:
        _merge(raw, *parse_override(text))
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["out"] = str(out)
    if threads is not None:
        raw["threads"] = threads
    return _build(ExperimentConfig, raw).validate()


def _deep_update(base: dict, new: dict):
    for k, v in new.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = v
