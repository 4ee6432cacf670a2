"""Run configuration: TOML file, named recipes, strict key checking.

Resolution order, lowest first: built-in defaults, the named ``recipe``,
the values in the file, then command-line overrides.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

from .errors import HarperZ2Error
from .model import as_flux

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(HarperZ2Error, ValueError):
    """Malformed or inconsistent configuration."""


# converters ---------------------------------------------------------------

def _int(v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    return v


def _pos_int(v, path):
    v = _int(v, path)
    if v < 1:
        raise ConfigError(f"{path}: must be >= 1, got {v}")
    return v


def _float(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{path}: must be finite")
    return v


def _bool(v, path):
    if not isinstance(v, bool):
        raise ConfigError(f"{path}: expected true/false, got {v!r}")
    return v


def _beta(v, path):
    if isinstance(v, (list, tuple)):
        v = tuple(v)
    try:
        f = as_flux(v)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return f"{f.numerator}/{f.denominator}"


def _str(v, path):
    if not isinstance(v, str):
        raise ConfigError(f"{path}: expected a string, got {v!r}")
    return v


def _choice(*options):
    def conv(v, path):
        if v not in options:
            raise ConfigError(f"{path}: expected one of {', '.join(options)}, got {v!r}")
        return v
    return conv


def _list(item):
    def conv(v, path):
        if not isinstance(v, list):
            raise ConfigError(f"{path}: expected a list, got {v!r}")
        return tuple(item(x, f"{path}[{i}]") for i, x in enumerate(v))
    return conv


def _opt(conv):
    def wrapped(v, path):
        # TOML has no null; an empty list stands for "unset"
        if v == []:
            return None
        return conv(v, path)
    return wrapped


def _seed(v, path):
    v = _int(v, path)
    if not 0 <= v < 2 ** 64:
        raise ConfigError(f"{path}: seed must fit in an unsigned 64-bit integer")
    return v


# sections -----------------------------------------------------------------

@dataclass(frozen=True)
class ModelConfig:
    N: int = 80
    beta: str = "1/3"
    lam: float = 15.0
    t: float = 1.0
    spin: str = "both"
    boundary: str = "open"
    theta: float = 0.0
    g: float = 1.0
    omega_p: float = 0.0


@dataclass(frozen=True)
class GridConfig:
    phi_points: int = 201
    phi_values: Tuple[float, ...] = (0.5, 1.0, 1.5)  # units of pi
    pump_steps: int = 401
    gap: int = 1
    n_k: int = 30
    n_phi: int = 30
    ring_N: int = 30
    n_theta: int = 24
    deltas: Tuple[float, ...] = (0.0, 0.05, 0.1)
    seeds: Tuple[int, ...] = (1, 2, 3, 4, 5)
    kappas: Tuple[float, ...] = (0.0, 0.1, 1.0, 10.0)
    decay_pattern: Optional[Tuple[float, ...]] = None
    validate_phi: Tuple[float, ...] = (0.7,)  # units of pi
    validate_N: int = 40
    bound_factor: float = 4.0


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    plot: bool = False


@dataclass(frozen=True)
class RunSettings:
    workers: Optional[int] = None
    seed: int = 0


_SCHEMA: Dict[str, Dict[str, Tuple[str, Callable]]] = {
    "model": {
        "N": ("N", _pos_int),
        "beta": ("beta", _beta),
        "lambda": ("lam", _float),
        "t": ("t", _float),
        "spin": ("spin", _choice("up", "down", "both")),
        "boundary": ("boundary", _choice("open", "periodic", "twisted")),
        "theta": ("theta", _float),
        "g": ("g", _float),
        "omega_p": ("omega_p", _float),
    },
    "grids": {
        "phi_points": ("phi_points", _pos_int),
        "phi_values": ("phi_values", _list(_float)),
        "pump_steps": ("pump_steps", _pos_int),
        "gap": ("gap", _pos_int),
        "n_k": ("n_k", _pos_int),
        "n_phi": ("n_phi", _pos_int),
        "ring_N": ("ring_N", _pos_int),
        "n_theta": ("n_theta", _pos_int),
        "deltas": ("deltas", _list(_float)),
        "seeds": ("seeds", _list(_seed)),
        "kappas": ("kappas", _list(_float)),
        "decay_pattern": ("decay_pattern", _opt(_list(_float))),
        "validate_phi": ("validate_phi", _list(_float)),
        "validate_N": ("validate_N", _pos_int),
        "bound_factor": ("bound_factor", _float),
    },
    "output": {
        "dir": ("dir", _str),
        "plot": ("plot", _bool),
    },
    "run": {
        "workers": ("workers", _pos_int),
        "seed": ("seed", _seed),
    },
}


_BASE = {"model": {"lambda": 15.0, "t": 1.0, "N": 80}}

RECIPES: Dict[str, Dict[str, Dict[str, Any]]] = {
    "fig3": {"model": {"beta": "1/2"},
             "grids": {"phi_values": [0.0, 0.5, 1.0]}},
    "fig4": {"model": {"beta": "1/3"},
             "grids": {"phi_values": [0.5, 1.0, 1.5]}},
    "fig5a": {"model": {"beta": "1/3", "spin": "up"},
              "grids": {"deltas": [0.0, 0.05, 0.1]}},
    "fig5b": {"model": {"beta": "1/3", "spin": "down"},
              "grids": {"deltas": [0.0, 0.05, 0.1]}},
    "fig5c": {"model": {"beta": "1/3", "spin": "up"},
              "grids": {"kappas": [0.0, 0.1, 1.0, 10.0]}},
    "fig5d": {"model": {"beta": "1/3", "spin": "down"},
              "grids": {"kappas": [0.0, 0.1, 1.0, 10.0]}},
}


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = ModelConfig()
    grids: GridConfig = GridConfig()
    output: OutputConfig = OutputConfig()
    run: RunSettings = RunSettings()
    recipe: Optional[str] = None

    @property
    def spins(self) -> Tuple[str, ...]:
        return ("up", "down") if self.model.spin == "both" else (self.model.spin,)

    def manifest(self) -> Dict[str, Any]:
        """Every setting that can change a number in the output.

        The output location and the worker count are left out on purpose:
        neither affects results, and including them would break
        byte-for-byte comparison between runs.
        """
        d = asdict(self)
        d.pop("output")
        d["run"].pop("workers")
        d["model"]["lambda"] = d["model"].pop("lam")
        return d

    def manifest_json(self) -> str:
        return json.dumps(self.manifest(), sort_keys=True, separators=(",", ":"))


def _apply(cfg: RunConfig, data: Dict[str, Any], origin: str) -> RunConfig:
    sections = {}
    for name, values in data.items():
        if name == "recipe":
            continue
        if name not in _SCHEMA:
            raise ConfigError(f"unknown key '{name}' in {origin}")
        if not isinstance(values, dict):
            raise ConfigError(f"{name}: expected a table")
        changes = {}
        for key, v in values.items():
            path = f"{name}.{key}"
            if key not in _SCHEMA[name]:
                raise ConfigError(f"unknown key '{path}' in {origin}")
            attr, conv = _SCHEMA[name][key]
            changes[attr] = conv(v, path)
        sections[name] = replace(getattr(cfg, name), **changes)
    return replace(cfg, **sections)


def _check(cfg: RunConfig) -> RunConfig:
    m, g = cfg.model, cfg.grids
    if m.t <= 0:
        raise ConfigError("model.t: must be positive")
    if m.lam < 0:
        raise ConfigError("model.lambda: must be non-negative")
    q = as_flux(m.beta).denominator
    if m.boundary != "open" and m.N % q:
        raise ConfigError(f"model.N: {m.N} is not a multiple of q={q} for a closed ring")
    if g.ring_N % q:
        raise ConfigError(f"grids.ring_N: {g.ring_N} is not a multiple of q={q}")
    if g.validate_N < 2:
        raise ConfigError("grids.validate_N: must be >= 2")
    if g.phi_points < 2 or g.pump_steps < 2:
        raise ConfigError("grids.phi_points and grids.pump_steps must be >= 2")
    if any(abs(d) >= 1 for d in g.deltas):
        raise ConfigError("grids.deltas: every |delta| must be < 1")
    if any(k < 0 for k in g.kappas):
        raise ConfigError("grids.kappas: decay rates must be non-negative")
    if g.decay_pattern is not None and len(g.decay_pattern) != q:
        raise ConfigError(f"grids.decay_pattern: needs q={q} entries, got {len(g.decay_pattern)}")
    return cfg


def resolve(data: Dict[str, Any], origin: str = "config",
            overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> RunConfig:
    """Build a validated RunConfig from parsed TOML data."""
    recipe = data.get("recipe")
    cfg = RunConfig()
    if recipe is not None:
        if recipe not in RECIPES:
            raise ConfigError(f"recipe: unknown recipe {recipe!r}; choose from {', '.join(RECIPES)}")
        cfg = _apply(cfg, _BASE, "recipe")
        cfg = _apply(cfg, RECIPES[recipe], f"recipe {recipe}")
        cfg = replace(cfg, recipe=recipe)
    cfg = _apply(cfg, data, origin)
    if overrides:
        cfg = _apply(cfg, overrides, "command line")
    return _check(cfg)


def load(path, overrides=None) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return resolve(data, str(path), overrides)
