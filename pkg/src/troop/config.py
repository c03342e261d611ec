"""
Run configuration: an INI-style document with flat sections.

Grammar (parsed by :mod:`configparser`)::

    [section]
    key = value        ; numbers, true/false, or comma-separated lists

Sections and keys (SI units unless the key ends in ``_gamma``, ``_deg``
or ``_mhz``; each quantity may be given in only one form)::

    [transition]  jg, gamma | linewidth_mhz, wavelength, mass
    [beams]       focus_distance, half_angle | half_angle_deg, helicities (h_x, h_y, h_z),
                  rabi_multipliers (x+, x-, y+, y-, z+, z-)
    [operating]   detuning | detuning_gamma, rabi | rabi_gamma, pumping
    [simulate]    n_atoms, dt, n_steps, seed, diffusion_factor, gravity,
                  burn_in_fraction, init_radius, record_stride, boundary
    [scan]        detuning_start | detuning_start_gamma, detuning_stop | detuning_stop_gamma,
                  detuning_steps, rabis | rabis_gamma, temperature (K, or "doppler")
    [output]      field_csv, pump_csv, characterize_json, scan_csv, stats_json, trajectory_csv

Omitted keys take the experimental defaults (Cs 852 nm, F=4 -> F'=5,
a = 3.5 cm, 22 deg divergence, detuning -2 Gamma, Rabi 0.8 Gamma).
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from . import constants as C
from .angular import HalfInt, TransitionSpec
from .dynamics import SimParams
from .errors import ValidationError
from .optics import BeamSet

_DEFAULT_GAMMA = C.CS_GAMMA


@dataclass(frozen=True)
class TransitionConfig:
    jg: str = "4"
    gamma: float = _DEFAULT_GAMMA
    wavelength: float = C.CS_WAVELENGTH
    mass: float = C.CS_MASS


@dataclass(frozen=True)
class BeamConfig:
    focus_distance: float = C.FOCUS_DISTANCE
    half_angle: float = math.radians(C.HALF_ANGLE_DEG)
    helicities: tuple = (-1, -1, 1)
    rabi_multipliers: tuple = (1.0,) * 6


@dataclass(frozen=True)
class OperatingConfig:
    detuning: float = C.DETUNING_GAMMA * _DEFAULT_GAMMA
    rabi: float = C.RABI_GAMMA * _DEFAULT_GAMMA
    pumping: bool = True


@dataclass(frozen=True)
class SimConfig:
    n_atoms: int = 500
    dt: float = 2e-5
    n_steps: int = 15000
    seed: int = 0
    diffusion_factor: float = 2.0
    gravity: bool = False
    burn_in_fraction: float = 0.5
    init_radius: float = 100e-6
    record_stride: int = 0
    boundary: float = 1e-3


@dataclass(frozen=True)
class ScanConfig:
    detuning_start: float = -1.0 * _DEFAULT_GAMMA
    detuning_stop: float = -3.3 * _DEFAULT_GAMMA
    detuning_steps: int = 12
    rabis: tuple = (0.8 * _DEFAULT_GAMMA, 1.0 * _DEFAULT_GAMMA, 1.5 * _DEFAULT_GAMMA)
    temperature: str = "doppler"


@dataclass(frozen=True)
class OutputConfig:
    field_csv: str = ""
    pump_csv: str = ""
    characterize_json: str = ""
    scan_csv: str = ""
    stats_json: str = ""
    trajectory_csv: str = ""


@dataclass(frozen=True)
class RunConfig:
    transition: TransitionConfig = TransitionConfig()
    beams: BeamConfig = BeamConfig()
    operating: OperatingConfig = OperatingConfig()
    simulate: SimConfig = SimConfig()
    scan: ScanConfig = ScanConfig()
    output: OutputConfig = OutputConfig()

    # -- derived objects --------------------------------------------------
    def transition_spec(self) -> TransitionSpec:
        return TransitionSpec.from_jg(self.transition.jg, self.transition.gamma, self.transition.wavelength)

    def beamset(self, **overrides) -> BeamSet:
        b, o = self.beams, self.operating
        kw = dict(focus_distance=b.focus_distance, rabi=o.rabi, detuning=o.detuning,
                  helicities=b.helicities, half_angle=b.half_angle, rabi_multipliers=b.rabi_multipliers)
        kw.update(overrides)
        return BeamSet.symmetric(**kw)

    def sim_params(self, **overrides) -> SimParams:
        s = self.simulate
        kw = dict(n_atoms=s.n_atoms, dt=s.dt, n_steps=s.n_steps, seed=s.seed, mass=self.transition.mass,
                  diffusion_factor=s.diffusion_factor, gravity=s.gravity, burn_in_fraction=s.burn_in_fraction,
                  init_radius=s.init_radius, record_stride=s.record_stride)
        kw.update(overrides)
        return SimParams(**kw)

    def scan_grid(self):
        s = self.scan
        if s.detuning_steps < 1 or not s.rabis:
            raise ValidationError("scan: range is empty (detuning_steps >= 1 and rabis non-empty required)")
        return list(np.linspace(s.detuning_start, s.detuning_stop, s.detuning_steps)), list(s.rabis)

    def scan_temperature(self):
        t = self.scan.temperature
        return None if t == "doppler" else float(t)

    def validate(self) -> "RunConfig":
        """Build every derived object once so module preconditions fail early."""
        self.transition_spec()
        self.beamset()
        self.sim_params()
        if not self.transition.mass > 0:
            raise ValidationError("transition.mass: must be positive")
        s = self.simulate
        if not 0 < s.boundary < self.beams.focus_distance:
            raise ValidationError("simulate.boundary: must lie in (0, focus_distance)")
        if self.scan.temperature != "doppler":
            try:
                t = float(self.scan.temperature)
            except ValueError:
                raise ValidationError("scan.temperature: must be 'doppler' or a temperature in K") from None
            if not t > 0:
                raise ValidationError("scan.temperature: must be positive")
        return self

    def to_text(self) -> str:
        """Canonical document; parses back to an identical RunConfig."""
        lines = []
        for sec in fields(self):
            lines.append(f"[{sec.name}]")
            obj = getattr(self, sec.name)
            for f in fields(obj):
                lines.append(f"{f.name} = {_format(getattr(obj, f.name))}")
            lines.append("")
        return "\n".join(lines)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


# alternative keys: name -> (canonical field, scale function)
_ALIASES = {
    "transition": {"linewidth_mhz": ("gamma", lambda v, g: 2 * math.pi * v * 1e6)},
    "beams": {"half_angle_deg": ("half_angle", lambda v, g: math.radians(v))},
    "operating": {"detuning_gamma": ("detuning", lambda v, g: v * g),
                  "rabi_gamma": ("rabi", lambda v, g: v * g)},
    "scan": {"detuning_start_gamma": ("detuning_start", lambda v, g: v * g),
             "detuning_stop_gamma": ("detuning_stop", lambda v, g: v * g),
             "rabis_gamma": ("rabis", lambda v, g: tuple(x * g for x in v))},
}


def _convert(section, key, raw, default):
    raw = raw.strip()
    where = f"{section}.{key}"
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError
            return low in ("true", "yes", "1", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            val = float(raw)
            if not math.isfinite(val):
                raise ValueError
            return val
        if isinstance(default, tuple):
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if default and isinstance(default[0], int) and not isinstance(default[0], bool):
                return tuple(int(x) for x in items)
            return tuple(float(x) for x in items)
        return raw
    except ValueError:
        raise ValidationError(f"{where}: cannot parse {raw!r} as {type(default).__name__}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"malformed config: {exc}") from None
    base = RunConfig()
    sections = {f.name: getattr(base, f.name) for f in fields(base)}
    for extra in cp.defaults():
        raise ValidationError(f"unknown key {extra!r} outside any section")
    unknown = set(cp.sections()) - set(sections)
    if unknown:
        raise ValidationError(f"unknown section [{sorted(unknown)[0]}]")
    # transition is parsed first: Gamma-scaled keys need its gamma
    values = {}
    for name in ("transition", "beams", "operating", "simulate", "scan", "output"):
        obj = sections[name]
        if not cp.has_section(name):
            values[name] = obj
            continue
        defaults = {f.name: getattr(obj, f.name) for f in fields(obj)}
        gamma = values["transition"].gamma if "transition" in values else base.transition.gamma
        kw = {}
        aliases = _ALIASES.get(name, {})
        for key, raw in cp.items(name):
            if key in defaults:
                target, val = key, _convert(name, key, raw, defaults[key])
                if key == "jg":
                    val = str(HalfInt.from_value(val))
            elif key in aliases:
                target, fn = aliases[key]
                val = fn(_convert(name, key, raw, defaults[target] if not isinstance(defaults[target], tuple)
                                  else (1.0,)), gamma)
            else:
                raise ValidationError(f"unknown key {name}.{key}")
            if target in kw:
                raise ValidationError(f"{name}.{target}: given more than once")
            kw[target] = val
        values[name] = replace(obj, **kw)
    cfg = RunConfig(**values)
    try:
        HalfInt.from_value(cfg.transition.jg)
    except ValidationError as exc:
        raise ValidationError(f"transition.jg: {exc}") from None
    if HalfInt.from_value(cfg.transition.jg).twice_value < 1:
        raise ValidationError("transition.jg: trap requires J_g >= 1/2")
    if len(cfg.beams.helicities) != 3 or any(h not in (-1, 1) for h in cfg.beams.helicities):
        raise ValidationError("beams.helicities: need three values, each +1 or -1")
    if len(cfg.beams.rabi_multipliers) != 6 or any(m < 0 for m in cfg.beams.rabi_multipliers):
        raise ValidationError("beams.rabi_multipliers: need six non-negative values")
    for key in ("gamma", "wavelength", "mass"):
        if not getattr(cfg.transition, key) > 0:
            raise ValidationError(f"transition.{key}: must be positive")
    if not cfg.operating.rabi >= 0:
        raise ValidationError("operating.rabi: must be >= 0")
    try:
        return cfg.validate()
    except ValidationError as exc:
        raise ValidationError(f"invalid configuration: {exc}") from None
