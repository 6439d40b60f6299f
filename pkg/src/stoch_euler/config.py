"""Run configuration: sectioned ``key = value`` text.

Example::

    [sim]
    dt = 0.001
    T = 0.25

    [noise]
    beta = 4.0

Keys may also be written fully qualified (``noise.beta = 4.0``) anywhere.
``#`` starts a comment.  Every key has a documented default; unknown keys,
type mismatches and constraint violations are rejected with the line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.key = key


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    T: float = 0.25
    particles: int = 512
    seed: int = 0
    blob_radius: float = 0.0          # 0 selects 2 x kernel-table cell
    kernel_cutoff: int = 32
    table_resolution: int = 1024


@dataclass(frozen=True)
class NoiseConfig:
    beta: float = 4.0
    cutoff: int = 8
    enabled: bool = True


@dataclass(frozen=True)
class SpectralConfig:
    resolution: int = 128
    enabled: bool = True
    advect: bool = True


@dataclass(frozen=True)
class InitConfig:
    kind: str = "sheet_circle"
    mass: float = 1.0
    mass_bound: float = 1.0
    radius: float = 1.0
    center1: float = math.pi
    center2: float = math.pi
    start1: float = math.pi - 1.0
    start2: float = math.pi
    end1: float = math.pi + 1.0
    end2: float = math.pi
    amplitude: float = 0.5
    epsilon: float = 0.05
    file: str = ""


@dataclass(frozen=True)
class OutputConfig:
    every: int = 10
    dir: str = "out"
    hminus1_cutoff: int = 32
    hminus4_cutoff: int = 16
    snapshots: bool = True


SECTIONS = {"sim": SimConfig, "noise": NoiseConfig, "spectral": SpectralConfig,
            "init": InitConfig, "output": OutputConfig}
INIT_KINDS = ("sheet_circle", "sheet_segment", "blob_grid", "file")


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    init: InitConfig = field(default_factory=InitConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def get(self, key: str) -> Any:
        section, name = key.split(".", 1)
        return getattr(getattr(self, section), name)

    def with_values(self, **dotted) -> "RunConfig":
        """Copy with ``section__key=value`` overrides, re-validated."""
        cfg = self
        for k, v in dotted.items():
            section, name = k.split("__", 1)
            cfg = replace(cfg, **{section: replace(getattr(cfg, section), **{name: v})})
        validate(cfg)
        return cfg

    def as_dict(self) -> dict:
        return {s: {f.name: getattr(getattr(self, s), f.name) for f in fields(SECTIONS[s])}
                for s in SECTIONS}

    @property
    def steps(self) -> int:
        return int(round(self.sim.T / self.sim.dt))


def _convert(raw: str, typ: type, key: str, line: int):
    text = raw.strip()
    if typ is bool:
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw.strip()!r}", line, key)
    if typ is int:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {text!r}", line, key) from None
    if typ is float:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {text!r}", line, key) from None
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    return text


_TYPES = {"float": float, "int": int, "bool": bool, "str": str}


def _field_types(section: str) -> dict:
    return {f.name: _TYPES[f.type] if isinstance(f.type, str) else f.type
            for f in fields(SECTIONS[section])}


def parse_config(text: str) -> RunConfig:
    values: dict[str, dict] = {s: {} for s in SECTIONS}
    lines_of: dict[str, int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno, section)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, val = (p.strip() for p in line.split("=", 1))
        if "." in key:
            sec, name = key.split(".", 1)
        elif section is not None:
            sec, name = section, key
        else:
            raise ConfigError(f"key {key!r} outside any section", lineno, key)
        full = f"{sec}.{name}"
        if sec not in SECTIONS or name not in _field_types(sec):
            raise ConfigError(f"unknown key {full}", lineno, full)
        if full in lines_of:
            raise ConfigError(f"duplicate key {full} (first set on line {lines_of[full]})", lineno, full)
        values[sec][name] = _convert(val, _field_types(sec)[name], full, lineno)
        lines_of[full] = lineno
    cfg = RunConfig(**{s: SECTIONS[s](**values[s]) for s in SECTIONS})
    try:
        validate(cfg)
    except ConfigError as exc:
        if exc.key in lines_of:
            raise ConfigError(str(exc), lines_of[exc.key], exc.key) from None
        raise
    return cfg


def validate(cfg: RunConfig) -> None:
    def need(cond: bool, key: str, message: str):
        if not cond:
            raise ConfigError(f"{key}: {message}", key=key)

    s, n, sp, i, o = cfg.sim, cfg.noise, cfg.spectral, cfg.init, cfg.output
    need(s.dt > 0, "sim.dt", "must be > 0")
    need(s.T >= 0, "sim.T", "must be >= 0")
    need(s.T == 0 or abs(s.T / s.dt - round(s.T / s.dt)) < 1e-9, "sim.T",
         "must be an integer multiple of sim.dt")
    need(s.particles >= 1, "sim.particles", "must be >= 1")
    need(s.seed >= 0, "sim.seed", "must be >= 0")
    need(s.table_resolution >= 64 and not s.table_resolution & (s.table_resolution - 1),
         "sim.table_resolution", "must be a power of two >= 64")
    need(1 <= s.kernel_cutoff <= s.table_resolution // 2, "sim.kernel_cutoff",
         "must lie in [1, table_resolution/2]")
    need(s.blob_radius == 0 or s.blob_radius >= 2 * math.pi / s.table_resolution,
         "sim.blob_radius", "must be 0 (auto) or >= the kernel table spacing")
    need(n.beta > 3, "noise.beta", f"must be > 3 (sum of ||sigma_k||_C1^2 diverges otherwise), got {n.beta}")
    need(n.cutoff >= 1, "noise.cutoff", "must be >= 1")
    need(sp.resolution >= 16 and not sp.resolution & (sp.resolution - 1),
         "spectral.resolution", "must be a power of two >= 16")
    need(not (sp.enabled and n.enabled) or 2 * n.cutoff < sp.resolution, "spectral.resolution",
         "must exceed 2 * noise.cutoff")
    need(i.kind in INIT_KINDS, "init.kind", f"must be one of {', '.join(INIT_KINDS)}")
    need(i.mass >= 0, "init.mass", "must be >= 0")
    need(i.mass_bound >= i.mass, "init.mass_bound", "must be >= init.mass (total variation ball)")
    need(i.kind != "file" or bool(i.file), "init.file", "required when init.kind = file")
    need(i.epsilon > 0, "init.epsilon", "must be > 0")
    need(0 <= i.amplitude < 1, "init.amplitude", "must lie in [0, 1)")
    need(o.every >= 1, "output.every", "must be >= 1")
    need(o.hminus1_cutoff >= 1 and o.hminus4_cutoff >= 1, "output.hminus1_cutoff", "cutoffs must be >= 1")


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return f'"{v}"'
    return str(v)


def emit_config(cfg: RunConfig) -> str:
    out = []
    for sec, vals in cfg.as_dict().items():
        out.append(f"[{sec}]")
        out += [f"{k} = {_format(v)}" for k, v in vals.items()]
        out.append("")
    return "\n".join(out)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"))
