"""Line-oriented ``key = value`` run configuration.

Every :class:`ModelParams` field is a key, plus the sweep settings listed in
``RUN_DEFAULTS``. Energies and rates take an optional ``eV`` or ``meV``
suffix; bare numbers are eV. ``gamma_c`` and ``gamma_h`` set both donors'
rates to half the given total. Missing keys keep their defaults.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional

from .experiments import DEFAULT_GAMMA_RANGE, DEFAULT_GRID_N, DEFAULT_IV_POINTS, DEFAULT_RATE_RANGE
from .physics import InvalidParameterError, ModelParams

PARAM_KEYS = tuple(f.name for f in fields(ModelParams))
ENERGY_KEYS = frozenset(PARAM_KEYS) - {"T_a", "n_h_override"} | {
    "gamma_c",
    "gamma_h",
    "gamma_x_min",
    "gamma_x_max",
    "gamma_c_min",
    "gamma_c_max",
    "Gamma_min",
    "Gamma_max",
}

RUN_DEFAULTS: dict[str, Any] = {
    "coupled": True,
    "out": None,
    "grid_n": DEFAULT_GRID_N,
    "gamma_x_min": DEFAULT_RATE_RANGE[0],
    "gamma_x_max": DEFAULT_RATE_RANGE[1],
    "gamma_c_min": DEFAULT_RATE_RANGE[0],
    "gamma_c_max": DEFAULT_RATE_RANGE[1],
    "T_min": 50.0,
    "T_max": 300.0,
    "Gamma_min": DEFAULT_GAMMA_RANGE[0],
    "Gamma_max": DEFAULT_GAMMA_RANGE[1],
    "points": DEFAULT_IV_POINTS,
    "t_end": None,
    "samples": 400,
    "tolerance": 1e-9,
    "initial_level": 0,
}
_INT_KEYS = {"grid_n", "points", "samples", "initial_level"}
_OPTIONAL_KEYS = {"out", "t_end", "n_h_override"}


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    settings: dict[str, Any] = field(default_factory=lambda: dict(RUN_DEFAULTS))

    def __getattr__(self, name):
        settings = self.__dict__.get("settings", {})
        if name in settings:
            return settings[name]
        raise AttributeError(name)

    def updated(self, **overrides) -> RunConfig:
        """Copy with settings or parameters replaced; ``None`` values are skipped."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(overrides) - set(RUN_DEFAULTS) - set(PARAM_KEYS)
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}")
        params = replace(self.params, **{k: v for k, v in overrides.items() if k in PARAM_KEYS})
        settings = dict(self.settings)
        settings.update({k: v for k, v in overrides.items() if k in RUN_DEFAULTS})
        _check_settings(settings)
        return RunConfig(params, settings)


def _parse_number(key: str, text: str) -> float:
    m = re.fullmatch(r"(.+?)\s*(meV|eV)?", text.strip())
    number, unit = m.group(1), m.group(2)
    if unit and key not in ENERGY_KEYS:
        raise ValueError(f"{key} does not take an energy unit")
    value = float(number)
    if not math.isfinite(value):
        raise ValueError(f"{key} must be finite")
    return value * 1e-3 if unit == "meV" else value


def _parse_value(key: str, text: str) -> Any:
    low = text.strip().lower()
    if key in _OPTIONAL_KEYS and low in ("none", ""):
        return None
    if key == "coupled":
        if low in ("true", "yes", "1", "coupled"):
            return True
        if low in ("false", "no", "0", "uncoupled"):
            return False
        raise ValueError(f"coupled must be true or false, got {text!r}")
    if key == "out":
        return text.strip()
    if key in _INT_KEYS:
        return int(text)
    return _parse_number(key, text)


def _check_settings(s: dict[str, Any]):
    if s["grid_n"] < 2:
        raise ConfigError("grid_n must be >= 2")
    if s["points"] < 2 or s["samples"] < 1:
        raise ConfigError("points must be >= 2 and samples >= 1")
    for lo, hi in (("gamma_x_min", "gamma_x_max"), ("gamma_c_min", "gamma_c_max"), ("Gamma_min", "Gamma_max"), ("T_min", "T_max")):
        if not 0 < s[lo] < s[hi]:
            raise ConfigError(f"need 0 < {lo} < {hi}")
    if s["initial_level"] < 0:
        raise ConfigError("initial_level must be >= 0")
    if s["t_end"] is not None and not s["t_end"] > 0:
        raise ConfigError("t_end must be > 0")


def parse_config(text: str) -> RunConfig:
    values: dict[str, Any] = {}
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in PARAM_KEYS and key not in RUN_DEFAULTS and key not in ("gamma_c", "gamma_h"):
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {key}: {exc}", lineno) from None
        where[key] = lineno

    for total, halves in (("gamma_c", ("gamma_1c", "gamma_2c")), ("gamma_h", ("gamma_1h", "gamma_2h"))):
        if total in values:
            clash = [h for h in halves if h in values]
            if clash:
                raise ConfigError(f"{total} conflicts with {clash[0]}", where[total])
            for h in halves:
                values[h] = values[total] / 2
                where[h] = where[total]
            del values[total]

    try:
        params = ModelParams(**{k: v for k, v in values.items() if k in PARAM_KEYS})
    except InvalidParameterError as exc:
        raise ConfigError(str(exc), where.get(exc.field)) from None
    settings = dict(RUN_DEFAULTS)
    settings.update({k: v for k, v in values.items() if k in RUN_DEFAULTS})
    try:
        _check_settings(settings)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(params, settings)


def serialize_config(config: RunConfig) -> str:
    """Inverse of :func:`parse_config`; floats use their shortest exact repr."""

    def fmt(value):
        if value is None:
            return "none"
        if isinstance(value, bool):
            return "true" if value else "false"
        return repr(value) if isinstance(value, float) else str(value)

    lines = [f"{k} = {fmt(getattr(config.params, k))}" for k in PARAM_KEYS]
    lines += [f"{k} = {fmt(config.settings[k])}" for k in RUN_DEFAULTS]
    return "\n".join(lines) + "\n"
