"""Run configuration: a strict TOML reader and typed section views.

Unknown sections and keys are fatal; every failure is a
:class:`~smg.errors.ConfigError` naming the offending key. Relative paths
are resolved against the directory of the config file.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def read_toml(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: not UTF-8 ({exc})") from None


# allowed keys per section
SCHEMA = {
    "frame": {"builtin", "file"},
    "domain": {"a1", "b1", "a2", "b2", "n1", "n2"},
    "solver": {"eps", "eps_schedule", "theta", "residual_tol", "update_tol", "max_iters",
               "lipschitz_cap", "linear_solver", "sweeps", "linear_tol"},
    "bc": {"kind", "value"},
    "output": {"dir"},
    "foliate": {"solution", "u_expression", "seeds", "lattice", "t_min", "t_max", "dt", "eps"},
    "norms": {"m", "p", "subdomain", "uniformity_factor", "m_y"},
    "diagnose": {"alphas", "probes", "radii", "base_point", "u0", "n_angles", "frames"},
    "caccioppoli": {"solution", "u_expression", "eps", "p", "inner", "outer"},
}


class Section:
    """Typed, key-checked view of one table."""

    def __init__(self, name: str, table: dict):
        if not isinstance(table, dict):
            raise ConfigError(f"[{name}] must be a table")
        unknown = sorted(set(table) - SCHEMA[name])
        if unknown:
            raise ConfigError(f"unknown key '{unknown[0]}' in [{name}]")
        self.name = name
        self.table = table

    def __contains__(self, key):
        return key in self.table

    def _missing(self, key):
        return ConfigError(f"[{self.name}] missing required key '{key}'")

    def _raw(self, key, default):
        if key in self.table:
            return self.table[key]
        if default is _REQUIRED:
            raise self._missing(key)
        return default

    def number(self, key, default: Any = None, *, positive=False, minimum=None) -> Optional[float]:
        v = self._raw(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"[{self.name}] '{key}' must be a finite number")
        if positive and not v > 0:
            raise ConfigError(f"{key} must be positive")
        if minimum is not None and v < minimum:
            raise ConfigError(f"[{self.name}] '{key}' must be >= {minimum}")
        return float(v)

    def integer(self, key, default: Any = None, *, minimum=None) -> Optional[int]:
        v = self._raw(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"[{self.name}] '{key}' must be an integer")
        if minimum is not None and v < minimum:
            raise ConfigError(f"[{self.name}] '{key}' must be >= {minimum}")
        return v

    def string(self, key, default: Any = None) -> Optional[str]:
        v = self._raw(key, default)
        if v is not None and not isinstance(v, str):
            raise ConfigError(f"[{self.name}] '{key}' must be a string")
        return v

    def numbers(self, key, default: Any = None, *, length=None) -> Optional[list[float]]:
        v = self._raw(key, default)
        if v is None:
            return None
        if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
            raise ConfigError(f"[{self.name}] '{key}' must be a list of numbers")
        if length is not None and len(v) != length:
            raise ConfigError(f"[{self.name}] '{key}' must have {length} entries")
        if not all(math.isfinite(x) for x in v):
            raise ConfigError(f"[{self.name}] '{key}' entries must be finite")
        return [float(x) for x in v]

    def strings(self, key, default: Any = None) -> Optional[list[str]]:
        v = self._raw(key, default)
        if v is None:
            return None
        if not isinstance(v, list) or any(not isinstance(x, str) for x in v):
            raise ConfigError(f"[{self.name}] '{key}' must be a list of strings")
        return list(v)


_REQUIRED = object()
REQUIRED = _REQUIRED


@dataclass
class RunConfig:
    path: Path
    data: dict

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        data = read_toml(path)
        unknown = sorted(set(data) - set(SCHEMA))
        if unknown:
            raise ConfigError(f"unknown section '{unknown[0]}'")
        cfg = cls(path, data)
        for name in data:
            cfg.section(name)  # key check up front
        return cfg

    @property
    def base(self) -> Path:
        return self.path.resolve().parent

    def has(self, name: str) -> bool:
        return name in self.data

    def section(self, name: str, required: bool = True) -> Optional[Section]:
        if name not in self.data:
            if required:
                raise ConfigError(f"missing section [{name}]")
            return None
        return Section(name, self.data[name])

    def resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else self.base / q


def parse_lattice(text: str) -> tuple[int, int]:
    """``"RxC"`` -> ``(R, C)``."""
    parts = str(text).lower().split("x")
    try:
        r, c = (int(x) for x in parts)
    except ValueError:
        raise ConfigError(f"seed lattice must look like RxC, got {text!r}") from None
    if r < 1 or c < 1:
        raise ConfigError(f"seed lattice must be positive, got {text!r}")
    return r, c
