"""Experiment configuration: line-oriented `key = value` files with dotted keys.

The format is deliberately tiny so it can be specified bit-exactly: UTF-8
text, one `key = value` per line, `#` starts a comment, lists are
comma-separated, floats use shortest round-trip formatting on output.  The
same lines are echoed as `#`-comments into every CSV a command writes, and
parsing those lines back yields an equal config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Invalid configuration value or key; carries the offending field name."""


MODES = ("curve", "partition", "stopping", "erm", "simulate", "fig3-left", "fig3-right")
PARAMETERIZATIONS = ("time", "logsnr")


@dataclass
class ExperimentConfig:
    """Resolved settings for one CLI command; defaults match the synthetic setup."""

    mode: str = "curve"
    outputs: str = "out"
    seed: int = 1
    schedule_kind: str = "ou"
    schedule_T: float = 2.0
    spectrum_true: tuple[float, ...] | None = None
    spectrum_estimated: tuple[float, ...] | None = None
    spectrum_n: int | None = None
    spectrum_seed: int = 1
    grid_t_points: int = 1000
    grid_parameterization: str = "logsnr"
    stopping_d0: int | None = None
    erm_c_sweep: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
    robust_u: float | None = None
    robust_n: int | None = None
    robust_cuniv: float = 1.0
    sim_steps: int = 1000
    sim_trajectories: int = 10000
    sim_score: str = "plugin"
    sim_cap: float = 8.0
    sim_stop_time: float | None = None
    sim_snapshots: tuple[float, ...] | None = None
    sim_dim: int | None = None
    sim_mc: bool = False


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_float(text: str) -> float:
    return float(text.strip())


def _parse_str(text: str) -> str:
    return text.strip()


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    return tuple(float(p) for p in parts if p)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


# key -> (field name, parser); order here is the canonical output order
_SCHEMA = {
    "mode": ("mode", _parse_str),
    "outputs": ("outputs", _parse_str),
    "seed": ("seed", _parse_int),
    "schedule.kind": ("schedule_kind", _parse_str),
    "schedule.T": ("schedule_T", _parse_float),
    "spectrum.true": ("spectrum_true", _parse_floats),
    "spectrum.estimated": ("spectrum_estimated", _parse_floats),
    "spectrum.n": ("spectrum_n", _parse_int),
    "spectrum.seed": ("spectrum_seed", _parse_int),
    "grid.t_points": ("grid_t_points", _parse_int),
    "grid.parameterization": ("grid_parameterization", _parse_str),
    "stopping.d0": ("stopping_d0", _parse_int),
    "erm.c_sweep": ("erm_c_sweep", _parse_floats),
    "robust.u": ("robust_u", _parse_float),
    "robust.n": ("robust_n", _parse_int),
    "robust.cuniv": ("robust_cuniv", _parse_float),
    "simulate.steps": ("sim_steps", _parse_int),
    "simulate.trajectories": ("sim_trajectories", _parse_int),
    "simulate.score": ("sim_score", _parse_str),
    "simulate.cap": ("sim_cap", _parse_float),
    "simulate.stop_time": ("sim_stop_time", _parse_float),
    "simulate.snapshots": ("sim_snapshots", _parse_floats),
    "simulate.dim": ("sim_dim", _parse_int),
    "simulate.mc": ("sim_mc", _parse_bool),
}

_FIELD_TO_KEY = {field: key for key, (field, _) in _SCHEMA.items()}


def apply_assignment(cfg: ExperimentConfig, key: str, raw: str, where: str = "") -> None:
    ctx = f" ({where})" if where else ""
    entry = _SCHEMA.get(key)
    if entry is None:
        raise ConfigError(f"unknown config key {key!r}{ctx}")
    field, parser = entry
    try:
        setattr(cfg, field, parser(raw))
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw.strip()!r}{ctx}: {exc}") from exc


def parse_config_text(text: str, cfg: ExperimentConfig | None = None, where: str = "") -> ExperimentConfig:
    """Parse `key = value` lines over defaults (or over an existing config)."""
    cfg = ExperimentConfig() if cfg is None else cfg
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected `key = value` on line {lineno}: {raw_line.strip()!r}")
        key, raw = line.split("=", 1)
        apply_assignment(cfg, key.strip(), raw, where=where or f"line {lineno}")
    return cfg


def config_lines(cfg: ExperimentConfig) -> list[str]:
    """Canonical `key = value` lines of every set field, in schema order."""
    out = []
    for key, (field, _) in _SCHEMA.items():
        value = getattr(cfg, field)
        if value is None:
            continue
        out.append(f"{key} = {_fmt(value)}")
    return out


def validate_config(cfg: ExperimentConfig) -> None:
    """Check cross-field consistency; raises ConfigError naming the field."""
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if cfg.schedule_kind != "ou":
        raise ConfigError(f"schedule.kind: only 'ou' is built in, got {cfg.schedule_kind!r}")
    if not (math.isfinite(cfg.schedule_T) and cfg.schedule_T > 0):
        raise ConfigError(f"schedule.T must be a positive real, got {cfg.schedule_T}")
    if cfg.grid_t_points < 2:
        raise ConfigError(f"grid.t_points must be at least 2, got {cfg.grid_t_points}")
    if cfg.grid_parameterization not in PARAMETERIZATIONS:
        raise ConfigError(
            f"grid.parameterization must be one of {PARAMETERIZATIONS}, got {cfg.grid_parameterization!r}"
        )
    for name, spec in (("spectrum.true", cfg.spectrum_true), ("spectrum.estimated", cfg.spectrum_estimated)):
        if spec is not None and any(not (math.isfinite(v) and v >= 0) for v in spec):
            raise ConfigError(f"{name} must contain non-negative reals")
    if cfg.spectrum_n is not None and cfg.spectrum_n < 1:
        raise ConfigError(f"spectrum.n must be positive, got {cfg.spectrum_n}")
    if cfg.sim_steps < 1:
        raise ConfigError(f"simulate.steps must be positive, got {cfg.sim_steps}")
    if cfg.sim_trajectories < 1:
        raise ConfigError(f"simulate.trajectories must be positive, got {cfg.sim_trajectories}")
    if cfg.sim_score not in ("exact", "plugin", "capped"):
        raise ConfigError(f"simulate.score must be exact|plugin|capped, got {cfg.sim_score!r}")
    if cfg.sim_score == "capped" and not (math.isfinite(cfg.sim_cap) and cfg.sim_cap > 1.0):
        raise ConfigError(f"simulate.cap must be a finite value above 1 for the capped score, got {cfg.sim_cap}")
    if cfg.sim_stop_time is not None and not 0.0 <= cfg.sim_stop_time <= cfg.schedule_T:
        raise ConfigError(f"simulate.stop_time must lie in [0, T], got {cfg.sim_stop_time}")
    if cfg.stopping_d0 is not None and cfg.stopping_d0 < 1:
        raise ConfigError(f"stopping.d0 must be at least 1, got {cfg.stopping_d0}")
    if any(not c > 1.0 for c in cfg.erm_c_sweep):
        raise ConfigError("erm.c_sweep entries must all exceed 1")
    if cfg.robust_u is not None and cfg.robust_u < 0:
        raise ConfigError(f"robust.u must be non-negative, got {cfg.robust_u}")
    if cfg.robust_n is not None and cfg.robust_n < 1:
        raise ConfigError(f"robust.n must be positive, got {cfg.robust_n}")
    if not cfg.robust_cuniv > 0:
        raise ConfigError(f"robust.cuniv must be positive, got {cfg.robust_cuniv}")


def copy_config(cfg: ExperimentConfig) -> ExperimentConfig:
    return ExperimentConfig(**{f.name: getattr(cfg, f.name) for f in fields(cfg)})
