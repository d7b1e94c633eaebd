"""Uniform rectangular grids, grid functions and the difference operators used
throughout the package.

All first derivatives are second-order central in the interior and
second-order one-sided on boundary rows (``numpy.gradient`` with
``edge_order=2``). Values are stored as ``values[i, j]`` at
``(x1[i], x2[j])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Grid:
    a1: float
    b1: float
    a2: float
    b2: float
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 3 or self.n2 < 3:
            raise ValueError(f"grid needs at least 3 nodes per direction, got {self.n1}x{self.n2}")
        if not (self.b1 > self.a1 and self.b2 > self.a2):
            raise ValueError("grid rectangle must have positive extent")

    @classmethod
    def square(cls, a: float, b: float, n: int) -> "Grid":
        return cls(a, b, a, b, n, n)

    @classmethod
    def from_spacing(cls, a1, b1, a2, b2, h) -> "Grid":
        """Grid whose spacing is (as close as possible to) ``h`` in both directions."""
        n1 = int(round((b1 - a1) / h)) + 1
        n2 = int(round((b2 - a2) / h)) + 1
        return cls(a1, b1, a2, b2, n1, n2)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def h1(self) -> float:
        return (self.b1 - self.a1) / (self.n1 - 1)

    @property
    def h2(self) -> float:
        return (self.b2 - self.a2) / (self.n2 - 1)

    @cached_property
    def x1(self) -> np.ndarray:
        return np.linspace(self.a1, self.b1, self.n1)

    @cached_property
    def x2(self) -> np.ndarray:
        return np.linspace(self.a2, self.b2, self.n2)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return mask

    def contains(self, p, tol: float = 0.0) -> bool:
        return (self.a1 - tol <= p[0] <= self.b1 + tol) and (self.a2 - tol <= p[1] <= self.b2 + tol)

    def index_box(self, box) -> tuple[slice, slice]:
        """Node slices covering the rectangle ``box = (c1, d1, c2, d2)``.

        Nodes are included if they lie in the closed rectangle, with a small
        relative tolerance so that boxes aligned with grid lines select them.
        """
        c1, d1, c2, d2 = box
        t1, t2 = 1e-9 * self.h1, 1e-9 * self.h2
        i = np.nonzero((self.x1 >= c1 - t1) & (self.x1 <= d1 + t1))[0]
        j = np.nonzero((self.x2 >= c2 - t2) & (self.x2 <= d2 + t2))[0]
        if i.size == 0 or j.size == 0:
            raise ValueError(f"box {box} contains no grid nodes")
        return slice(i[0], i[-1] + 1), slice(j[0], j[-1] + 1)

    def sample(self, f: Callable) -> "GridFunction":
        X1, X2 = self.mesh
        vals = np.broadcast_to(np.asarray(f(X1, X2), dtype=float), self.shape)
        return GridFunction(self, np.array(vals))


@dataclass(frozen=True)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function has non-finite values")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


# --- difference operators -------------------------------------------------


def d1(z: np.ndarray, grid: Grid) -> np.ndarray:
    return np.gradient(z, grid.h1, axis=0, edge_order=2)


def d2(z: np.ndarray, grid: Grid) -> np.ndarray:
    return np.gradient(z, grid.h2, axis=1, edge_order=2)


def _second(z: np.ndarray, h: float, axis: int) -> np.ndarray:
    z = np.moveaxis(z, axis, 0)
    out = np.empty_like(z)
    out[1:-1] = (z[2:] - 2.0 * z[1:-1] + z[:-2]) / h**2
    if z.shape[0] >= 4:
        out[0] = (2.0 * z[0] - 5.0 * z[1] + 4.0 * z[2] - z[3]) / h**2
        out[-1] = (2.0 * z[-1] - 5.0 * z[-2] + 4.0 * z[-3] - z[-4]) / h**2
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


def second_derivatives(z: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Compact (3x3) second differences ``(z_11, z_12, z_22)``."""
    z11 = _second(z, grid.h1, 0)
    z22 = _second(z, grid.h2, 1)
    z12 = d1(d2(z, grid), grid)
    return z11, z12, z22


def interior(a: np.ndarray, margin: int = 1) -> np.ndarray:
    return a[margin:-margin, margin:-margin]


# --- quadrature ------------------------------------------------------------


def trapezoid_weights(n1: int, n2: int, h1: float, h2: float) -> np.ndarray:
    w1 = np.full(n1, h1)
    w1[[0, -1]] = 0.5 * h1
    w2 = np.full(n2, h2)
    w2[[0, -1]] = 0.5 * h2
    return np.outer(w1, w2)


def integrate(f: np.ndarray, grid: Grid, box=None) -> float:
    """Tensor trapezoidal rule over the grid, or over the nodes inside ``box``."""
    if box is not None:
        s1, s2 = grid.index_box(box)
        f = f[s1, s2]
    w = trapezoid_weights(f.shape[0], f.shape[1], grid.h1, grid.h2)
    # np.sum on a contiguous array uses fixed-order pairwise summation
    return float(np.sum(np.ascontiguousarray(w * f)))


# --- interpolation -------------------------------------------------------


def bilinear(gf: GridFunction, p1, p2):
    """Bilinear interpolation of ``gf`` at points inside the grid rectangle."""
    g = gf.grid
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    s = (p1 - g.a1) / g.h1
    t = (p2 - g.a2) / g.h2
    i = np.clip(np.floor(s).astype(int), 0, g.n1 - 2)
    j = np.clip(np.floor(t).astype(int), 0, g.n2 - 2)
    fs = s - i
    ft = t - j
    v = gf.values
    # lerp form: reproduces constants bit-exactly
    lo = v[i, j] + fs * (v[i + 1, j] - v[i, j])
    hi = v[i, j + 1] + fs * (v[i + 1, j + 1] - v[i, j + 1])
    return lo + ft * (hi - lo)


def transfinite(grid: Grid, boundary: np.ndarray) -> np.ndarray:
    """Bilinear transfinite (Coons) interpolation of the boundary rows of ``boundary``."""
    b = np.asarray(boundary, dtype=float)
    s = (grid.x1 - grid.a1) / (grid.b1 - grid.a1)
    t = (grid.x2 - grid.a2) / (grid.b2 - grid.a2)
    S, T = np.meshgrid(s, t, indexing="ij")
    left, right = b[0, :][None, :], b[-1, :][None, :]
    bottom, top = b[:, 0][:, None], b[:, -1][:, None]
    out = ((1 - S) * left + S * right + (1 - T) * bottom + T * top
           - ((1 - S) * (1 - T) * b[0, 0] + S * (1 - T) * b[-1, 0]
              + (1 - S) * T * b[0, -1] + S * T * b[-1, -1]))
    out[grid.boundary_mask] = b[grid.boundary_mask]
    return out


def grid_from_nodes(x1: np.ndarray, x2: np.ndarray) -> Grid:
    """Reconstruct a grid from the distinct node coordinates of a CSV."""
    u1 = np.unique(x1)
    u2 = np.unique(x2)
    grid = Grid(float(u1[0]), float(u1[-1]), float(u2[0]), float(u2[-1]), u1.size, u2.size)
    if not (np.array_equal(grid.x1, u1) and np.array_equal(grid.x2, u2)):
        tol1 = 1e-9 * grid.h1
        tol2 = 1e-9 * grid.h2
        if not (np.allclose(grid.x1, u1, atol=tol1, rtol=0) and np.allclose(grid.x2, u2, atol=tol2, rtol=0)):
            raise ValueError("CSV nodes do not form a uniform grid")
    return grid


def sig17(x: float) -> str:
    return "%.17g" % x if math.isfinite(x) else repr(x)
