"""Projected vector fields on an intrinsic graph ``x3 = u(x1, x2)``.

``X1u`` is ``sigma_1(x, u(x)) . grad``, ``Yu`` is ``sigma_2(x, u(x)) . grad`` and
``X2u = eps * Yu``. All operators act on grid functions through the second
order differences of :mod:`smg.grid`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .frames import Frame
from .grid import GridFunction, d1, d2


@dataclass(frozen=True)
class ProjectedContext:
    frame: Frame
    u: GridFunction
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def grid(self):
        return self.u.grid

    @cached_property
    def sigma1(self) -> np.ndarray:
        X1, X2 = self.grid.mesh
        return self.frame.s1(X1, X2, self.u.values)

    @cached_property
    def sigma2(self) -> np.ndarray:
        X1, X2 = self.grid.mesh
        return self.frame.s2(X1, X2, self.u.values)

    @cached_property
    def structure(self):
        X1, X2 = self.grid.mesh
        return self.frame.c(X1, X2, self.u.values)

    def field(self, i: int) -> np.ndarray:
        """Coefficients of ``X_{i,u}`` (``i`` in 1, 2), shape ``(2, n1, n2)``."""
        return self.sigma1 if i == 1 else self.eps * self.sigma2

    # array-level kernels, used by the solver and diagnostics

    def x1(self, z: np.ndarray) -> np.ndarray:
        g = self.grid
        return self.sigma1[0] * d1(z, g) + self.sigma1[1] * d2(z, g)

    def y(self, z: np.ndarray) -> np.ndarray:
        g = self.grid
        return self.sigma2[0] * d1(z, g) + self.sigma2[1] * d2(z, g)

    def x2(self, z: np.ndarray) -> np.ndarray:
        return self.eps * self.y(z)

    def apply(self, i: int, z: np.ndarray) -> np.ndarray:
        return self.x1(z) if i == 1 else self.x2(z)

    def gradient(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``grad_eps z = (X1u z, X2u z)``."""
        g = self.grid
        dz1, dz2 = d1(z, g), d2(z, g)
        s1, s2 = self.sigma1, self.sigma2
        return s1[0] * dz1 + s1[1] * dz2, self.eps * (s2[0] * dz1 + s2[1] * dz2)


def _check(ctx: ProjectedContext, z: GridFunction):
    if z.grid != ctx.grid:
        raise ValueError("grid function lives on a different grid than the context")


def apply_X1u(ctx: ProjectedContext, z: GridFunction) -> GridFunction:
    _check(ctx, z)
    return z.with_values(ctx.x1(z.values))


def apply_Yu(ctx: ProjectedContext, z: GridFunction) -> GridFunction:
    _check(ctx, z)
    return z.with_values(ctx.y(z.values))


def apply_X2u(ctx: ProjectedContext, z: GridFunction) -> GridFunction:
    _check(ctx, z)
    return z.with_values(ctx.x2(z.values))


def adjoint_m(ctx: ProjectedContext) -> tuple[GridFunction, GridFunction]:
    """Zero-order terms of the formal adjoints, ``X_{i,u}^T = -X_{i,u} - m_i``."""
    X1, X2 = ctx.grid.mesh
    u = ctx.u.values
    c = ctx.structure
    eps = ctx.eps
    m1 = ctx.frame.div1(X1, X2, u) + ctx.y(u)
    m2 = eps * ctx.frame.div2(X1, X2, u) - eps * c.c1_23 * ctx.x1(u) - c.c2_23 * ctx.x2(u)
    return ctx.u.with_values(m1), ctx.u.with_values(m2)


def commutator_omega(ctx: ProjectedContext) -> tuple[GridFunction, GridFunction]:
    """Coefficients of ``[X1u, X2u] = omega^1 X1u + omega^2 X2u``."""
    u = ctx.u.values
    c = ctx.structure
    eps = ctx.eps
    x1u = ctx.x1(u)
    w1 = eps * (c.c1_12 - x1u * c.c1_23)
    w2 = c.c2_12 - x1u * c.c2_23 - ctx.y(u)
    return ctx.u.with_values(w1), ctx.u.with_values(w2)


def lipschitz_budget(ctx: ProjectedContext) -> tuple[float, float]:
    """``(sup |X1u u|, sup |Yu u|)``; their sum is the monitored Lipschitz bound."""
    u = ctx.u.values
    return float(np.max(np.abs(ctx.x1(u)))), float(np.max(np.abs(ctx.y(u))))


def structure_bound(ctx: ProjectedContext) -> float:
    """``|m1| + |m2|/eps + |omega^1|/eps + |omega^2|`` in sup norm."""
    m1, m2 = adjoint_m(ctx)
    w1, w2 = commutator_omega(ctx)
    eps = ctx.eps
    return m1.sup() + m2.sup() / eps + w1.sup() / eps + w2.sup()
