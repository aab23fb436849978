"""YAML scenario configs: loading, environment overrides, validation, and
conversion into model objects.

Every physical quantity is a dimensionless number in hbar = 1 units.
"""

from __future__ import annotations

import copy
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .eprb import AnalyzerPair, random_analyzers
from .field import FieldScenario, PointImpulse, SampledGrid, UniformInSpace, Wavepacket
from .lattice import LatticeConfig, LatticeScenario

ENV_PREFIX = "EPRBFOCK_"
MODELS = ("eprb4", "lattice", "continuum")
SWEEP_SCALES = ("linear", "log")


class ConfigError(ValueError):
    """Invalid config; ``location`` is the dotted key path of the problem."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def load_config(path: str | Path | None, environ: Mapping[str, str] | None = None) -> dict:
    """Read a YAML config (or start empty) and apply environment overrides."""
    data: dict = {}
    if path is not None:
        text = Path(path).read_text()
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
            raise ConfigError(where, f"YAML syntax error: {getattr(exc, 'problem', exc)}") from None
        if not isinstance(data, dict):
            raise ConfigError(str(path), "top level must be a mapping")
    return apply_env_overrides(data, os.environ if environ is None else environ)


def apply_env_overrides(data: dict, environ: Mapping[str, str]) -> dict:
    """EPRBFOCK_LATTICE__SITES=6 sets ``lattice.sites``; values are parsed as YAML."""
    out = copy.deepcopy(data)
    for key in sorted(environ):
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX):].lower().replace("__", ".")
        set_path(out, path, yaml.safe_load(environ[key]))
    return out


def set_path(data: dict, path: str, value: Any) -> None:
    """Assign into nested dicts/lists by dotted path; list indices are integers."""
    parts = path.split(".")
    node = data
    for i, part in enumerate(parts[:-1]):
        nxt = parts[i + 1]
        if isinstance(node, list):
            node = node[_list_index(node, part, parts[: i + 1])]
            continue
        if part not in node or node[part] is None:
            node[part] = [] if nxt.isdigit() else {}
        node = node[part]
    last = parts[-1]
    if isinstance(node, list):
        idx = _list_index(node, last, parts)
        node[idx] = value
    else:
        node[last] = value


def _list_index(node: list, part: str, parts) -> int:
    if not part.isdigit() or int(part) >= len(node):
        raise ConfigError(".".join(parts), f"no list element {part}")
    return int(part)


def get_path(data: Any, path: str, default: Any = None) -> Any:
    node = data
    for part in path.split("."):
        if isinstance(node, list) and part.isdigit() and int(part) < len(node):
            node = node[int(part)]
        elif isinstance(node, dict) and part in node:
            node = node[part]
        else:
            return default
    return node


# -- field readers ---------------------------------------------------------

def _number(cfg: Mapping, key: str, loc: str, default: Any = ..., positive=False, nonneg=False) -> float:
    if key not in cfg:
        if default is ...:
            raise ConfigError(f"{loc}{key}", "required key is missing")
        return default
    val = cfg[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{loc}{key}", f"expected a number, got {val!r}")
    val = float(val)
    if not math.isfinite(val):
        raise ConfigError(f"{loc}{key}", "must be finite")
    if positive and val <= 0:
        raise ConfigError(f"{loc}{key}", "must be positive")
    if nonneg and val < 0:
        raise ConfigError(f"{loc}{key}", "must be non-negative")
    return val


def _integer(cfg: Mapping, key: str, loc: str, default: Any = ..., minimum: int | None = None) -> int:
    if key not in cfg:
        if default is ...:
            raise ConfigError(f"{loc}{key}", "required key is missing")
        return default
    val = cfg[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{loc}{key}", f"expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{loc}{key}", f"must be at least {minimum}")
    return val


def _vector(cfg: Mapping, key: str, loc: str, length: int | None = None) -> np.ndarray:
    if key not in cfg:
        raise ConfigError(f"{loc}{key}", "required key is missing")
    val = cfg[key]
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        val = [val]
    if (not isinstance(val, list) or not val
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val)):
        raise ConfigError(f"{loc}{key}", f"expected a list of numbers, got {val!r}")
    if length is not None and len(val) != length:
        raise ConfigError(f"{loc}{key}", f"expected {length} components, got {len(val)}")
    return np.array(val, dtype=float)


def _mapping(cfg: Mapping, key: str, loc: str) -> Mapping:
    val = cfg.get(key)
    if not isinstance(val, Mapping):
        raise ConfigError(f"{loc}{key}", "required mapping is missing")
    return val


def _check_keys(cfg: Mapping, allowed: set[str], loc: str):
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"{loc}{key}", f"unknown key (allowed: {', '.join(sorted(allowed))})")


def read_model(cfg: Mapping) -> str:
    model = cfg.get("model")
    if model not in MODELS:
        raise ConfigError("model", f"expected one of {', '.join(MODELS)}, got {model!r}")
    return model


def read_analyzers(cfg: Mapping, seed: int) -> list[AnalyzerPair]:
    """Fixed ``analyzers: {n1, n2}`` (or a list of them) and/or
    ``random_pairs: N`` seeded from ``seed``."""
    pairs = []
    spec = cfg.get("analyzers")
    entries = spec if isinstance(spec, list) else ([spec] if spec is not None else [])
    for k, entry in enumerate(entries):
        loc = f"analyzers.{k}." if isinstance(spec, list) else "analyzers."
        if not isinstance(entry, Mapping):
            raise ConfigError(loc.rstrip("."), "expected a mapping with n1 and n2")
        _check_keys(entry, {"n1", "n2"}, loc)
        n1, n2 = _vector(entry, "n1", loc, 3), _vector(entry, "n2", loc, 3)
        for name, n in (("n1", n1), ("n2", n2)):
            if abs(np.linalg.norm(n) - 1.0) > 1e-12:
                raise ConfigError(f"{loc}{name}", f"analyzer must be a unit vector (norm {np.linalg.norm(n):.15g})")
        pairs.append(AnalyzerPair(n1, n2))
    count = _integer(cfg, "random_pairs", "", default=0, minimum=0)
    if count:
        pairs.extend(random_analyzers(np.random.default_rng(seed), count))
    if not pairs:
        raise ConfigError("analyzers", "give analyzers or random_pairs")
    return pairs


def read_wavepacket(entry: Any, loc: str, dim: int | None, mass: float | None = None) -> Wavepacket:
    if not isinstance(entry, Mapping):
        raise ConfigError(loc.rstrip("."), "expected a wavepacket mapping")
    _check_keys(entry, {"center", "velocity", "alpha", "mass"}, loc)
    center = _vector(entry, "center", loc, dim)
    velocity = _vector(entry, "velocity", loc, len(center))
    alpha = _number(entry, "alpha", loc, positive=True)
    m = mass if mass is not None else _number(entry, "mass", loc, default=1.0, positive=True)
    return Wavepacket(center, velocity, alpha, m)


def read_wavepackets(cfg: Mapping, dim: int | None = None, mass: float | None = None):
    wps = cfg.get("wavepackets")
    if not isinstance(wps, list) or len(wps) != 2:
        raise ConfigError("wavepackets", "expected a list of exactly two wavepackets")
    wp1 = read_wavepacket(wps[0], "wavepackets.0.", dim, mass)
    wp2 = read_wavepacket(wps[1], "wavepackets.1.", wp1.dim, mass)
    return wp1, wp2


def _pulse_profile(cfg: Mapping, loc: str):
    """Optional ``pulse: {t_center, duration}`` time envelope."""
    if "pulse" not in cfg:
        return None, ()
    pulse = _mapping(cfg, "pulse", loc)
    ploc = f"{loc}pulse."
    _check_keys(pulse, {"t_center", "duration"}, ploc)
    tc = _number(pulse, "t_center", ploc)
    dur = _number(pulse, "duration", ploc, positive=True)
    return (lambda t: np.exp(-0.5 * ((np.asarray(t, float) - tc) / dur) ** 2),
            tuple(tc + s * dur for s in (-6, -3, 0, 3, 6)))


def read_coupling(cfg: Mapping, dim: int):
    c = _mapping(cfg, "coupling", "")
    loc = "coupling."
    kind = c.get("kind")
    if kind == "constant":
        _check_keys(c, {"kind", "strength"}, loc)
        return UniformInSpace.constant(_number(c, "strength", loc))
    if kind == "gaussian_pulse":
        _check_keys(c, {"kind", "strength", "t_center", "duration"}, loc)
        return UniformInSpace.gaussian_pulse(_number(c, "strength", loc), _number(c, "t_center", loc),
                                             _number(c, "duration", loc, positive=True))
    if kind == "linear":
        _check_keys(c, {"kind", "strength", "slope", "t_ref"}, loc)
        return UniformInSpace.linear(_number(c, "strength", loc), _number(c, "slope", loc),
                                     _number(c, "t_ref", loc, default=0.0))
    if kind == "point":
        _check_keys(c, {"kind", "strength", "location", "time"}, loc)
        return PointImpulse(_number(c, "strength", loc), _vector(c, "location", loc, dim),
                            _number(c, "time", loc))
    if kind == "grid_bump":
        _check_keys(c, {"kind", "strength", "center", "width", "half_extent", "points", "pulse"}, loc)
        profile, breaks = _pulse_profile(c, loc)
        return SampledGrid.gaussian_bump(
            _number(c, "strength", loc), _vector(c, "center", loc, dim),
            _number(c, "width", loc, positive=True), _number(c, "half_extent", loc, positive=True),
            _integer(c, "points", loc, minimum=2), profile, breaks)
    raise ConfigError(f"{loc}kind",
                      f"expected constant, gaussian_pulse, linear, point or grid_bump, got {kind!r}")


def read_times(cfg: Mapping) -> tuple[float, float]:
    t0 = _number(cfg, "t0", "", default=0.0)
    t = _number(cfg, "t", "")
    if t < t0:
        raise ConfigError("t", f"end time {t} precedes t0 = {t0}")
    return t0, t


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]


def read_sweep(cfg: Mapping) -> SweepSpec | None:
    """``sweep: {parameter, start, stop, steps, scale}`` or ``{parameter, values}``."""
    if "sweep" not in cfg or cfg["sweep"] is None:
        return None
    s = _mapping(cfg, "sweep", "")
    loc = "sweep."
    _check_keys(s, {"parameter", "start", "stop", "steps", "scale", "values"}, loc)
    param = s.get("parameter")
    if not isinstance(param, str) or not param:
        raise ConfigError(f"{loc}parameter", "expected a dotted key path")
    if get_path(cfg, param, default=None) is None and param not in ("gamma", "t", "epsilon"):
        raise ConfigError(f"{loc}parameter", f"{param!r} does not exist in this config")
    if "values" in s:
        vals = _vector(s, "values", loc)
        return SweepSpec(param, tuple(float(v) for v in vals))
    start, stop = _number(s, "start", loc), _number(s, "stop", loc)
    steps = _integer(s, "steps", loc, minimum=1)
    scale = s.get("scale", "linear")
    if scale not in SWEEP_SCALES:
        raise ConfigError(f"{loc}scale", f"expected linear or log, got {scale!r}")
    if scale == "log":
        if start <= 0 or stop <= 0:
            raise ConfigError(f"{loc}start", "log sweeps need positive endpoints")
        vals = np.geomspace(start, stop, steps)
    else:
        vals = np.linspace(start, stop, steps)
    return SweepSpec(param, tuple(float(v) for v in vals))


def sweep_points(cfg: dict) -> list[dict]:
    """One concrete config per sweep value (or the config itself)."""
    spec = read_sweep(cfg)
    base = {k: v for k, v in cfg.items() if k != "sweep"}
    if spec is None:
        return [base]
    out = []
    for v in spec.values:
        point = copy.deepcopy(base)
        set_path(point, spec.parameter, v)
        out.append(point)
    return out


def field_scenario(cfg: Mapping, analyzers: AnalyzerPair | None = None) -> FieldScenario:
    wp1, wp2 = read_wavepackets(cfg)
    coupling = read_coupling(cfg, wp1.dim)
    t0, t = read_times(cfg)
    eps = _number(cfg, "epsilon", "", default=0.0, nonneg=True)
    return FieldScenario(wp1, wp2, coupling, eps, t0, t, analyzers)


def lattice_scenario(cfg: Mapping, analyzers: AnalyzerPair) -> LatticeScenario:
    lat = _mapping(cfg, "lattice", "")
    _check_keys(lat, {"sites", "spacing", "mass"}, "lattice.")
    config = LatticeConfig(
        _integer(lat, "sites", "lattice.", minimum=2),
        _number(lat, "spacing", "lattice.", default=1.0, positive=True),
        _number(lat, "mass", "lattice.", default=1.0, positive=True),
    )
    wp1, wp2 = read_wavepackets(cfg, dim=1, mass=config.mass)
    c = _mapping(cfg, "coupling", "")
    loc = "coupling."
    _check_keys(c, {"kind", "strength", "center", "width", "pulse"}, loc)
    strength = _number(c, "strength", loc)
    kind = c.get("kind")
    if kind == "uniform":
        kappa = np.full(config.sites, strength)
    elif kind == "bump":
        centre = _number(c, "center", loc)
        width = _number(c, "width", loc, positive=True)
        dx = config.positions - centre
        dx = dx - config.length * np.round(dx / config.length)
        kappa = strength * np.exp(-0.5 * (dx / width) ** 2)
    else:
        raise ConfigError(f"{loc}kind", f"expected uniform or bump, got {kind!r}")
    profile, _ = _pulse_profile(c, loc)
    t0, t = read_times(cfg)
    eps = _number(cfg, "epsilon", "", default=0.0, nonneg=True)
    return LatticeScenario(config, wp1, wp2, kappa, eps, t0, t, analyzers,
                           None if profile is None else (lambda s, p=profile: float(p(s))))


def read_epsilons(cfg: Mapping) -> list[float]:
    eps = cfg.get("epsilons", [1e-1, 3e-2, 1e-2, 3e-3])
    vals = _vector({"epsilons": eps}, "epsilons", "")
    if np.any(vals < 0):
        raise ConfigError("epsilons", "values must be non-negative")
    return [float(v) for v in vals]
