"""Experiment configuration: ``[section]`` headers with ``key = value`` lines.

Every key has a default, so an empty file (or no file) gives the standard
desk-scale runs.  Unknown sections or keys are rejected.  List values are
comma separated; parameter triples ``p q s`` are separated by semicolons.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Unreadable or malformed configuration (CLI exit code 2)."""


class PreconditionError(ValueError):
    """Parsed values outside what the modules accept (CLI exit code 3)."""


@dataclass(frozen=True)
class General:
    seed: int = 0
    family_size: int = 10
    groups: tuple = ("abelian", "heisenberg")


@dataclass(frozen=True)
class AbelianBed:
    M: int = 1024
    h: float = 0.1
    j_range: tuple = (-3, 3)


@dataclass(frozen=True)
class HeisenbergBed:
    M: int = 14
    K: int = 160
    h: float = 1.0
    j_range: tuple = (0, 2)


@dataclass(frozen=True)
class Calculus:
    """Periodic line where the Chebyshev path is compared with exact Fourier."""
    M: int = 512
    h: float = 0.25


@dataclass(frozen=True)
class Fine:
    """Fine periodic line for interpolated dilations and moments."""
    M: int = 16384
    h: float = 0.025


@dataclass(frozen=True)
class Decay:
    M: int = 4096
    h: float = 0.05
    r_min: float = 1e-3
    r_max: float = 1e3
    r_points: int = 49
    vanishing_order: int = 3
    m: int = 2


@dataclass(frozen=True)
class Besov:
    params: tuple = ((2.0, 2.0, 0.0), (1.0, 1.0, 0.0), (2.0, 2.0, 0.5), (2.0, 1.0, -0.5))
    per_octave: int = 8
    heat_k: int = 1


@dataclass(frozen=True)
class Frames:
    M: int = 4096
    h: float = 0.05
    j_range: tuple = (-1, 1)
    scales_per_octave: int = 4
    epsilons: tuple = (0.8, 0.4, 0.2)
    fixed_order: int = 2
    tol: float = 1e-6
    pairs: int = 100


@dataclass(frozen=True)
class Coorbit:
    params: tuple = ((2.0, 2.0, 0.0), (1.0, 1.0, 0.0))
    index_map: str = "stated"


@dataclass(frozen=True)
class ExperimentConfig:
    general: General = field(default_factory=General)
    abelian: AbelianBed = field(default_factory=AbelianBed)
    heisenberg: HeisenbergBed = field(default_factory=HeisenbergBed)
    calculus: Calculus = field(default_factory=Calculus)
    fine: Fine = field(default_factory=Fine)
    decay: Decay = field(default_factory=Decay)
    besov: Besov = field(default_factory=Besov)
    frames: Frames = field(default_factory=Frames)
    coorbit: Coorbit = field(default_factory=Coorbit)

    @property
    def seed(self) -> int:
        return self.general.seed

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, general=replace(self.general, seed=int(seed)))


SECTIONS = {f.name: f.default_factory for f in fields(ExperimentConfig)}


# parsing ---------------------------------------------------------------------

def _parse_value(raw: str, default, where: str):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            v = raw.lower()
            if v not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return v in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, str):
            return raw
        if isinstance(default, tuple):
            if default and isinstance(default[0], tuple):
                out = []
                for part in raw.split(";"):
                    if part.strip():
                        out.append(tuple(float(x) for x in part.replace(",", " ").split()))
                return tuple(out)
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if default and isinstance(default[0], str):
                return tuple(items)
            if default and isinstance(default[0], int) and not isinstance(default[0], bool):
                return tuple(int(x) for x in items)
            return tuple(float(x) for x in items)
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from exc
    raise ConfigError(f"{where}: unsupported value type")


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";;"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    if cp.defaults():
        raise ConfigError("keys outside a [section] are not allowed")
    parts = {}
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        base = SECTIONS[name]()
        known = {f.name: getattr(base, f.name) for f in fields(base)}
        vals = {}
        for key, raw in cp.items(name):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            vals[key] = _parse_value(raw, known[key], f"[{name}] {key}")
        parts[name] = replace(base, **vals)
    cfg = ExperimentConfig(**parts)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror or exc}") from exc
    return parse_config(text)


def dump_config(cfg: ExperimentConfig) -> str:
    """Text form that :func:`parse_config` reads back to ``cfg``."""
    lines = []
    for f in fields(cfg):
        sec = getattr(cfg, f.name)
        lines.append(f"[{f.name}]")
        for g in fields(sec):
            v = getattr(sec, g.name)
            if isinstance(v, tuple) and v and isinstance(v[0], tuple):
                s = "; ".join(" ".join(repr(x) for x in t) for t in v)
            elif isinstance(v, tuple):
                s = ", ".join(str(x) for x in v)
            else:
                s = repr(v) if isinstance(v, float) else str(v)
            lines.append(f"{g.name} = {s}")
        lines.append("")
    return "\n".join(lines)


# validation ------------------------------------------------------------------

def _need(cond, msg):
    if not cond:
        raise PreconditionError(msg)


def _check_jr(jr, where):
    _need(len(jr) == 2 and jr[0] <= jr[1], f"{where}: j_range must be two integers lo <= hi")


def validate(cfg: ExperimentConfig) -> None:
    g = cfg.general
    _need(g.family_size >= 2, "general.family_size must be >= 2")
    _need(g.seed >= 0, "general.seed must be >= 0")
    _need(len(g.groups) > 0 and set(g.groups) <= {"abelian", "heisenberg"},
          "general.groups must list abelian and/or heisenberg")
    for name in ("abelian", "calculus", "fine", "decay", "frames"):
        s = getattr(cfg, name)
        _need(s.M >= 8 and s.h > 0, f"{name}: need M >= 8 and h > 0")
    hb = cfg.heisenberg
    _need(hb.M >= 2 and hb.K >= 2 and hb.h > 0, "heisenberg: need M, K >= 2 and h > 0")
    _check_jr(cfg.abelian.j_range, "abelian")
    _check_jr(cfg.heisenberg.j_range, "heisenberg")
    _check_jr(cfg.frames.j_range, "frames")
    d = cfg.decay
    _need(0 < d.r_min < d.r_max and d.r_points >= 8, "decay: need 0 < r_min < r_max, r_points >= 8")
    _need(d.vanishing_order >= 1 and d.m >= 1, "decay: vanishing_order and m must be >= 1")
    b = cfg.besov
    _need(b.per_octave >= 4, "besov.per_octave must be >= 4")
    _need(b.heat_k >= 1, "besov.heat_k must be >= 1")
    for t in b.params + cfg.coorbit.params:
        _need(len(t) == 3, "parameter triples must read 'p q s'")
        _need(t[0] >= 1 and t[1] >= 1, f"exponents p, q must be >= 1 in {t}")
    for t in b.params:
        _need(abs(t[2]) < 2 * b.heat_k, f"heat characterization needs |s| < 2k, got s={t[2]}")
    for t in cfg.coorbit.params:
        _need(np.isfinite(t[1]), "index map is undefined for q = inf")
    _need(cfg.coorbit.index_map in ("stated", "scaling"), "coorbit.index_map must be stated or scaling")
    f = cfg.frames
    _need(f.scales_per_octave >= 1, "frames.scales_per_octave must be >= 1")
    _need(len(f.epsilons) >= 1 and all(e > 0 for e in f.epsilons), "frames.epsilons must be positive")
    _need(f.fixed_order >= 0 and f.pairs >= 1 and 0 < f.tol < 1, "frames: bad fixed_order, pairs or tol")
