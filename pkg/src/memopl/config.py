"""Experiment configuration stored as INI files.

Every option lives in a section mirroring the simulator's components::

    [grid]       topology, width, height, series_r, m_init, output_load, output_termination
    [device]     r_on, r_off, d, mu_v, window, window_p, window_j
    [sim]        dt, t_end, max_dx_per_step, linear_tol, record_every
    [image]      source, v_max, brightness
    [threshold]  scheme, m_t, min_count, per_half, band_lo, band_hi
    [baseline]   prewitt_threshold, sobel_threshold
    [noise]      sigma, mu
    [fault]      yields, seeds, r_on_lo, r_on_hi, r_off_lo, r_off_hi, m_init_lo, m_init_hi, topologies
    [light]      bright_scale, dark_scale, bright_threshold, dark_threshold, fixed_threshold,
                 iou_target, t_max, record_every
    [run]        seed, out, frames, traces

``image.source`` is either a synthetic image name (``cartoon``,
``rubiks_cube``, ``step``) or a path to a PGM file.  Lists are comma
separated.  Unknown keys are rejected so typos do not pass silently.

``image.brightness`` multiplies the light intensity ``15 - level`` of the
input image.  ``light.bright_scale`` and ``light.dark_scale`` are gains on the
bias amplitude used by the light-adaptation experiment.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields

# Drift mobility fitted so the single-node experiment (5x5 hexagonal grid,
# Prodromakis window p=1, j=1, 30 mV centre bias through 1 kOhm) reads
# 21.9 mV at the centre after 30 s.  See ``experiments.calibrate_mu_v``.
CALIBRATED_MU_V = 1.3627e-13


@dataclass
class GridSection:
    topology: str = "hexagonal"
    width: int = 64
    height: int = 64
    series_r: float = 1e3
    m_init: float = 200.0
    output_load: float = 1e6
    output_termination: str = "source"


@dataclass
class DeviceSection:
    r_on: float = 100.0
    r_off: float = 16e3
    d: float = 1e-8
    mu_v: float = CALIBRATED_MU_V
    window: str = "biolek"
    window_p: float = 2.0
    window_j: float = 1.0


@dataclass
class SimSection:
    dt: float = 0.01
    t_end: float = 30.0
    max_dx_per_step: float = 0.01
    linear_tol: float = 1e-10
    record_every: float = 1.0


@dataclass
class ImageSection:
    source: str = "cartoon"
    v_max: float = 0.03
    brightness: float = 1.0


@dataclass
class ThresholdSection:
    scheme: str = "fuse_majority"
    m_t: float = 1600.0
    min_count: int = 3
    per_half: bool = False
    band_lo: float = 600.0
    band_hi: float = 2000.0


@dataclass
class BaselineSection:
    prewitt_threshold: float = 0.5
    sobel_threshold: float = 2.0 / 3.0


@dataclass
class NoiseSection:
    sigma: float = 0.0
    mu: float = 0.0


@dataclass
class FaultSection:
    yields: list = field(default_factory=lambda: [1.0, 0.75, 0.5])
    seeds: int = 5
    r_on_lo: float = 0.5
    r_on_hi: float = 4.0
    r_off_lo: float = 0.625
    r_off_hi: float = 1.25
    m_init_lo: float = 0.5
    m_init_hi: float = 40.0
    topologies: list = field(default_factory=lambda: ["hexagonal", "rectangular"])


@dataclass
class LightSection:
    bright_scale: float = 2.0
    dark_scale: float = 0.5
    bright_threshold: float = 6350.0
    dark_threshold: float = 1200.0
    fixed_threshold: float = 3000.0
    iou_target: float = 0.9
    t_max: float = 90.0
    record_every: float = 0.1


@dataclass
class RunSection:
    seed: int = 0
    out: str = "out"
    frames: bool = True
    traces: bool = False


@dataclass
class ExperimentConfig:
    grid: GridSection = field(default_factory=GridSection)
    device: DeviceSection = field(default_factory=DeviceSection)
    sim: SimSection = field(default_factory=SimSection)
    image: ImageSection = field(default_factory=ImageSection)
    threshold: ThresholdSection = field(default_factory=ThresholdSection)
    baseline: BaselineSection = field(default_factory=BaselineSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    fault: FaultSection = field(default_factory=FaultSection)
    light: LightSection = field(default_factory=LightSection)
    run: RunSection = field(default_factory=RunSection)

    def replace(self, **sections) -> "ExperimentConfig":
        """Copy with selected fields changed: ``cfg.replace(sim={"t_end": 5})``."""
        new = dataclasses.replace(self)
        for name, changes in sections.items():
            setattr(new, name, dataclasses.replace(getattr(self, name), **changes))
        return new


COMMAND_DEFAULTS = {
    "single-node": {
        "grid": {"width": 5, "height": 5},
        "device": {"window": "prodromakis", "window_p": 1.0, "window_j": 1.0},
        "sim": {"record_every": 0.5},
        "image": {"source": "none"},
        "run": {"traces": True},
    },
    "smooth": {"image": {"source": "cartoon"}, "noise": {"sigma": 0.3}},
    "edges": {"image": {"source": "rubiks_cube"}, "threshold": {"m_t": 3000.0}},
    "light": {"image": {"source": "rubiks_cube"}, "threshold": {"m_t": 3000.0}},
    "fault": {"image": {"source": "rubiks_cube"}, "threshold": {"m_t": 3000.0}},
}


def default_config(command: str | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if command is not None:
        cfg = cfg.replace(**COMMAND_DEFAULTS.get(command, {}))
    return cfg


def _parse(value: str, current):
    if isinstance(current, bool):
        v = value.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(current, int):
        return int(value)
    if isinstance(current, float):
        return float(value)
    if isinstance(current, list):
        items = [s.strip() for s in value.split(",") if s.strip()]
        if current and isinstance(current[0], (int, float)):
            return [float(s) for s in items]
        return items
    return value.strip()


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(_format(v) for v in value)
    return str(value)


def apply_ini(cfg: ExperimentConfig, text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)
    known = {f.name for f in fields(ExperimentConfig)}
    for section in parser.sections():
        if section not in known:
            raise ValueError(f"unknown config section [{section}]")
        current = getattr(cfg, section)
        valid = {f.name for f in fields(current)}
        changes = {}
        for key, raw in parser.items(section):
            if key not in valid:
                raise ValueError(f"unknown config key {section}.{key}")
            changes[key] = _parse(raw, getattr(current, key))
        cfg = cfg.replace(**{section: changes})
    return cfg


def load_config(path, command: str | None = None) -> ExperimentConfig:
    with open(path) as fh:
        return apply_ini(default_config(command), fh.read())


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for sec in fields(ExperimentConfig):
        lines.append(f"[{sec.name}]")
        section = getattr(cfg, sec.name)
        for f in fields(section):
            lines.append(f"{f.name} = {_format(getattr(section, f.name))}")
        lines.append("")
    return "\n".join(lines)
