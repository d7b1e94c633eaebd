"""Polarized step-2 frames in three dimensions.

A frame is given by ``X3 = d/dx3`` and ``X_i = sigma_i^1 d/dx1 + sigma_i^2 d/dx2``
for ``i = 1, 2`` with ``sigma_2 = d/dx3 sigma_1``, together with the structure
coefficients of ``[X2, X3]`` and ``[X1, X2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ConfigError, RankDegenerate
from .expr import Expression, ExpressionError

RANK_TOL = 1e-8
FD_STEP = 1e-4


class StructureConstants(NamedTuple):
    """Coefficients of ``[X2,X3] = c^i_{2,3} X_i`` and ``[X1,X2] = c^i_{1,2} X_i``."""

    c1_23: np.ndarray
    c2_23: np.ndarray
    c3_23: np.ndarray
    c1_12: np.ndarray
    c2_12: np.ndarray
    c3_12: np.ndarray


C_KEYS = StructureConstants._fields


def _pair(f, x1, x2, x3) -> np.ndarray:
    shape = np.broadcast(np.asarray(x1), np.asarray(x2), np.asarray(x3)).shape
    a, b = f(x1, x2, x3)
    return np.stack([np.broadcast_to(np.asarray(a, dtype=float), shape),
                     np.broadcast_to(np.asarray(b, dtype=float), shape)])


@dataclass(frozen=True)
class Frame:
    """Immutable frame data; every callable is evaluated element-wise.

    ``sigma2``, ``div_sigma1`` and ``div_sigma2`` are optional closed forms.
    When absent they are replaced by central differences (in ``x3`` for
    ``sigma2``, in ``x1, x2`` at frozen ``x3`` for the divergences).
    """

    name: str
    sigma1: Callable
    structure_c: Callable
    sigma2: Optional[Callable] = None
    x3_period: Optional[float] = None
    div_sigma1: Optional[Callable] = None
    div_sigma2: Optional[Callable] = None
    fd_step: float = FD_STEP

    def wrap(self, x3):
        if self.x3_period is None:
            return x3
        return np.mod(x3, self.x3_period)

    def s1(self, x1, x2, x3) -> np.ndarray:
        """``(sigma_1^1, sigma_1^2)`` stacked on the leading axis."""
        return _pair(self.sigma1, x1, x2, self.wrap(x3))

    def s2(self, x1, x2, x3) -> np.ndarray:
        if self.sigma2 is not None:
            return _pair(self.sigma2, x1, x2, self.wrap(x3))
        return self.d3_sigma1(x1, x2, x3, self.fd_step)

    def d3_sigma1(self, x1, x2, x3, step: float) -> np.ndarray:
        """Central difference of ``sigma_1`` in ``x3``."""
        x3 = np.asarray(x3, dtype=float)
        return (self.s1(x1, x2, x3 + step) - self.s1(x1, x2, x3 - step)) / (2.0 * step)

    def c(self, x1, x2, x3) -> StructureConstants:
        shape = np.broadcast(np.asarray(x1), np.asarray(x2), np.asarray(x3)).shape
        vals = self.structure_c(x1, x2, self.wrap(x3))
        return StructureConstants(*(np.broadcast_to(np.asarray(v, dtype=float), shape) for v in vals))

    def _div(self, s, x1, x2, x3):
        h = self.fd_step
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return ((s(x1 + h, x2, x3)[0] - s(x1 - h, x2, x3)[0])
                + (s(x1, x2 + h, x3)[1] - s(x1, x2 - h, x3)[1])) / (2.0 * h)

    def div1(self, x1, x2, x3) -> np.ndarray:
        """``d_1 sigma_1^1 + d_2 sigma_1^2`` with the third argument held fixed."""
        if self.div_sigma1 is not None:
            return _scalar(self.div_sigma1, x1, x2, self.wrap(x3))
        return self._div(self.s1, x1, x2, x3)

    def div2(self, x1, x2, x3) -> np.ndarray:
        if self.div_sigma2 is not None:
            return _scalar(self.div_sigma2, x1, x2, self.wrap(x3))
        return self._div(self.s2, x1, x2, x3)


def _scalar(f, x1, x2, x3):
    shape = np.broadcast(np.asarray(x1), np.asarray(x2), np.asarray(x3)).shape
    return np.broadcast_to(np.asarray(f(x1, x2, x3), dtype=float), shape).copy()


def _zeros6(x1, x2, x3):
    return (0.0,) * 6


def builtin_heisenberg() -> Frame:
    return Frame(
        name="heisenberg",
        sigma1=lambda x1, x2, x3: (1.0, x3),
        sigma2=lambda x1, x2, x3: (0.0, 1.0),
        structure_c=_zeros6,
        div_sigma1=lambda x1, x2, x3: 0.0,
        div_sigma2=lambda x1, x2, x3: 0.0,
    )


def builtin_roto_translation() -> Frame:
    return Frame(
        name="roto_translation",
        sigma1=lambda x1, x2, x3: (np.cos(x3), np.sin(x3)),
        sigma2=lambda x1, x2, x3: (-np.sin(x3), np.cos(x3)),
        # [X2, X3] = X1, all other brackets vanish
        structure_c=lambda x1, x2, x3: (1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        x3_period=2.0 * math.pi,
        div_sigma1=lambda x1, x2, x3: 0.0,
        div_sigma2=lambda x1, x2, x3: 0.0,
    )


BUILTINS = {
    "heisenberg": builtin_heisenberg,
    "roto_translation": builtin_roto_translation,
    "e2": builtin_roto_translation,
}


def builtin(name: str) -> Frame:
    try:
        return BUILTINS[name.lower()]()
    except KeyError:
        raise ConfigError(f"unknown builtin frame {name!r}; choose from {sorted(BUILTINS)}") from None


def rank_determinant(frame: Frame, p, rank_tol: float = RANK_TOL):
    """``sigma_1^1 d3 sigma_1^2 - sigma_1^2 d3 sigma_1^1`` at ``p = (x1, x2, x3)``.

    ``p`` may hold arrays, in which case an array is returned and every entry
    is checked. Raises :class:`RankDegenerate` if any ``|value| <= rank_tol``.
    """
    x1, x2, x3 = p
    s1 = frame.s1(x1, x2, x3)
    s2 = frame.s2(x1, x2, x3)
    det = s1[0] * s2[1] - s1[1] * s2[0]
    bad = np.abs(det) <= rank_tol
    if np.any(bad):
        where = np.argwhere(np.atleast_1d(bad))[0]
        raise RankDegenerate(
            f"frame {frame.name!r} fails the rank condition (|det| <= {rank_tol:g}) at sample {tuple(where)}"
        )
    return float(det) if np.ndim(det) == 0 else det


def sigma2_discrepancy(frame: Frame, points: np.ndarray, step: float) -> float:
    """Max over ``points`` (shape ``(3, N)``) of ``|sigma_2 - d3 sigma_1|``, ``d3`` by central difference."""
    x1, x2, x3 = points
    diff = frame.s2(x1, x2, x3) - frame.d3_sigma1(x1, x2, x3, step)
    return float(np.max(np.abs(diff)))


# --- custom frame files ----------------------------------------------------

FRAME_KEYS = {"name", "sigma1_1", "sigma1_2", "sigma2_1", "sigma2_2", "x3_period"} | {
    f"c_{k[1]}_{k[3:]}" for k in C_KEYS
}


def _expr(table, key, default=None):
    val = table.get(key, default)
    if val is None:
        return None
    try:
        return Expression(str(val))
    except ExpressionError as exc:
        raise ConfigError(f"[frame] {key}: {exc}") from None


def frame_from_table(table: dict) -> Frame:
    unknown = set(table) - FRAME_KEYS
    if unknown:
        raise ConfigError(f"unknown key(s) in [frame]: {', '.join(sorted(unknown))}")
    for key in ("sigma1_1", "sigma1_2"):
        if key not in table:
            raise ConfigError(f"[frame] is missing {key}")
    e11, e12 = _expr(table, "sigma1_1"), _expr(table, "sigma1_2")
    e21, e22 = _expr(table, "sigma2_1"), _expr(table, "sigma2_2")
    if (e21 is None) != (e22 is None):
        raise ConfigError("[frame] give both sigma2_1 and sigma2_2 or neither")
    c_exprs = [_expr(table, f"c_{k[1]}_{k[3:]}", 0) for k in C_KEYS]

    def sigma1(x1, x2, x3):
        return e11(x1=x1, x2=x2, x3=x3), e12(x1=x1, x2=x2, x3=x3)

    sigma2 = None
    if e21 is not None:
        def sigma2(x1, x2, x3):
            return e21(x1=x1, x2=x2, x3=x3), e22(x1=x1, x2=x2, x3=x3)

    def structure_c(x1, x2, x3):
        return tuple(e(x1=x1, x2=x2, x3=x3) for e in c_exprs)

    period = table.get("x3_period")
    if period is not None:
        try:
            period = float(Expression(str(period), variables=())())
        except ExpressionError as exc:
            raise ConfigError(f"[frame] x3_period: {exc}") from None
        if not period > 0:
            raise ConfigError("[frame] x3_period must be positive")
    return Frame(name=str(table.get("name", "custom")), sigma1=sigma1, sigma2=sigma2,
                 structure_c=structure_c, x3_period=period)


def load_frame_file(path) -> Frame:
    from .config import read_toml

    data = read_toml(Path(path))
    unknown = set(data) - {"frame"}
    if unknown:
        raise ConfigError(f"unknown section(s) in frame file: {', '.join(sorted(unknown))}")
    if "frame" not in data:
        raise ConfigError(f"{path}: missing [frame] section")
    return frame_from_table(data["frame"])
