"""Run configuration: presets, JSON loading with field diagnostics, overrides."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .correlations import MeasurementSampler
from .errors import ConfigError
from .models import DimerParams, MilitelloParams
from .sync import SweepSettings
from .units import mode_period_ps

#: one oscillation period of the natural-unit (1 cm^-1) mode, in ps
NATURAL_PERIOD_PS = mode_period_ps(1.0)


@dataclass(frozen=True)
class SamplerSettings:
    seed: int = 7041
    batch_size: int = 64
    max_batches: int = 200
    rel_tol: float = 1e-4
    patience: int = 5

    def build(self) -> MeasurementSampler:
        return MeasurementSampler(seed=self.seed, batch_size=self.batch_size,
                                  max_batches=self.max_batches,
                                  rel_tol=self.rel_tol, patience=self.patience)


@dataclass(frozen=True)
class CorrelationSettings:
    stride: int = 1
    tail_points: int = 5
    measured_side: str = "A"
    mode_subspace: int | None = None


@dataclass(frozen=True)
class RunConfig:
    model: str = "dimer"
    dimer: DimerParams = field(default_factory=DimerParams)
    militello: MilitelloParams = field(default_factory=MilitelloParams)
    detunings: tuple[float, ...] = (1.002,)
    settings: SweepSettings = field(default_factory=SweepSettings)
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    correlations: CorrelationSettings = field(default_factory=CorrelationSettings)
    seed: int = 7041
    output_dir: str = "out"
    figures: bool = True

    def __post_init__(self):
        if self.model not in ("dimer", "militello"):
            raise ConfigError("must be 'dimer' or 'militello'", "model")
        if not self.detunings:
            raise ConfigError("detuning list must be nonempty", "detunings")
        if any(d < 1.0 for d in self.detunings):
            raise ConfigError("detunings must be >= 1.0", "detunings")

    @property
    def params(self) -> DimerParams | MilitelloParams:
        return self.dimer if self.model == "dimer" else self.militello

    def to_dict(self) -> dict:
        def encode(obj):
            if dataclasses.is_dataclass(obj):
                return {f.name: encode(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
            if isinstance(obj, tuple):
                return [encode(v) for v in obj]
            if isinstance(obj, complex):
                return {"re": obj.real, "im": obj.imag}
            return obj

        return encode(self)


# Named parameter sets for the scenarios studied with this toolkit.  The
# two-level/two-mode presets run in natural units realised as 1 cm^-1, so one
# mode period is ~33.36 ps and trajectories span a couple dozen periods.
PRESETS: dict[str, dict] = {
    # reference dimer, weak delocalisation (eta ~ 0.17)
    "pe545": {
        "model": "dimer",
        "detunings": [1.002],
        "settings": {"t_end": 10.0, "dt_out": 0.002, "state_stride": 64},
    },
    # more delocalised variant: V raised so 2V/|delta_e| = 0.5
    "pe545-eta05": {
        "model": "dimer",
        "dimer": {"V": 260.5},
        "detunings": [1.002],
        "settings": {"t_end": 10.0, "dt_out": 0.002, "state_stride": 64},
    },
    # two-level/two-mode model, interaction phase scan scenario
    "militello-phi": {
        "model": "militello",
        "detunings": [1.0],
        "settings": {
            "t_end": 24 * NATURAL_PERIOD_PS,
            "dt_out": NATURAL_PERIOD_PS / 24,
            "state_stride": 8,
        },
    },
    # two-level/two-mode model with detuned modes and phi1 = pi
    "militello-detuned": {
        "model": "militello",
        "militello": {"phi1": math.pi},
        "detunings": [1.2, 1.35],
        "settings": {
            "t_end": 24 * NATURAL_PERIOD_PS,
            "dt_out": NATURAL_PERIOD_PS / 24,
            "state_stride": 8,
        },
    },
}


_SECTION_TYPES = {
    "dimer": DimerParams,
    "militello": MilitelloParams,
    "settings": SweepSettings,
    "sampler": SamplerSettings,
    "correlations": CorrelationSettings,
}


def _coerce_scalar(value, target_type, where: str):
    if target_type is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if target_type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected integer, got {value!r}", where)
        return value
    if target_type is complex:
        if isinstance(value, dict):
            return complex(value.get("re", 0.0), value.get("im", 0.0))
        if isinstance(value, (int, float)):
            return complex(value)
        raise ConfigError(f"expected number or {{re, im}}, got {value!r}", where)
    return value


def _build_section(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object, got {type(data).__name__}", where)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown key (valid: {sorted(fields)})", f"{where}.{key}")
        ftype = fields[key].type
        tname = ftype if isinstance(ftype, str) else getattr(ftype, "__name__", "")
        target = {"float": float, "int": int, "complex": complex}.get(tname)
        kwargs[key] = _coerce_scalar(value, target, f"{where}.{key}") if target else value
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), where) from exc


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from plain JSON data, naming any offending field."""
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be an object")
    # accept a manifest produced by an earlier run
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    kwargs: dict[str, Any] = {}
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key (valid: {sorted(known)})", key)
        if key in _SECTION_TYPES:
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        elif key == "detunings":
            if not isinstance(value, list) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise ConfigError("must be a list of numbers", "detunings")
            kwargs[key] = tuple(float(v) for v in value)
        elif key == "seed":
            kwargs[key] = _coerce_scalar(value, int, "seed")
        elif key == "figures":
            if not isinstance(value, bool):
                raise ConfigError("must be true or false", "figures")
            kwargs[key] = value
        else:
            kwargs[key] = value
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    """Read a JSON configuration (or a manifest from a previous run)."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    return config_from_dict(data)


def preset_config(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset (have: {sorted(PRESETS)})", "preset")
    return config_from_dict(json.loads(json.dumps(PRESETS[name])))
