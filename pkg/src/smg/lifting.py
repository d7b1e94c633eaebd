"""Freezing and lifting of the projected fields at a base point.

The lifted fields on ``Omega x R_s`` are ``X1 + s^2 Y``, ``X2`` and ``d/ds``.
Freezing the coefficients at ``(x0, u(x0))`` gives linear approximate
exponential coordinates and a first-order Taylor operator whose remainder is
measured by :func:`approximation_order`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import FrozenDegenerate
from .frames import RANK_TOL, Frame
from .grid import bilinear
from .projected import ProjectedContext


@dataclass(frozen=True)
class FrozenFrame:
    x0: tuple[float, float]
    u0: float
    sigma: np.ndarray  # sigma[j, k] = sigma_{j+1}^{k+1}(x0, u0)
    D: float

    @property
    def Sigma(self) -> np.ndarray:
        return self.sigma / self.D


def freeze(frame: Frame, x0, u0: float, tol: float = RANK_TOL) -> FrozenFrame:
    x0 = (float(x0[0]), float(x0[1]))
    s1 = frame.s1(x0[0], x0[1], u0)
    s2 = frame.s2(x0[0], x0[1], u0)
    sigma = np.array([[float(s1[0]), float(s1[1])], [float(s2[0]), float(s2[1])]])
    D = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] * sigma[1, 0]
    if abs(D) <= tol:
        raise FrozenDegenerate(f"frozen determinant {D:g} at x0={x0}, u0={u0:g}")
    return FrozenFrame(x0, float(u0), sigma, float(D))


def freeze_at(ctx: ProjectedContext, x0, tol: float = RANK_TOL) -> FrozenFrame:
    """Freeze at ``x0`` with ``u0`` interpolated from the context's grid function."""
    u0 = float(bilinear(ctx.u, x0[0], x0[1]))
    return freeze(ctx.frame, x0, u0, tol)


def frozen_coords(ff: FrozenFrame, x) -> tuple[np.ndarray, np.ndarray]:
    """``(e01, eps*e02)`` of ``x`` (arrays broadcast); the product ``eps*e02`` is never split."""
    S = ff.Sigma
    d1 = np.asarray(x[0], dtype=float) - ff.x0[0]
    d2 = np.asarray(x[1], dtype=float) - ff.x0[1]
    e01 = S[1, 1] * d1 - S[1, 0] * d2
    ee02 = S[0, 0] * d2 - S[0, 1] * d1
    return e01, ee02


def unfreeze(ff: FrozenFrame, e01, ee02) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`frozen_coords`: ``x = x0 + e01 sigma_1 + (eps e02) sigma_2``."""
    s = ff.sigma
    return (ff.x0[0] + e01 * s[0, 0] + ee02 * s[1, 0],
            ff.x0[1] + e01 * s[0, 1] + ee02 * s[1, 1])


@dataclass(frozen=True)
class Probe:
    """A smooth test function with its Euclidean gradient."""

    name: str
    f: Callable
    grad: Callable


def _poly():
    return Probe(
        "polynomial",
        lambda x1, x2: x1 + 2 * x2 + x1**2 - x1 * x2 + 0.5 * x2**2 + x1**2 * x2,
        lambda x1, x2: (1 + 2 * x1 - x2 + 2 * x1 * x2, 2 - x1 + x2 + x1**2),
    )


def _trig():
    return Probe(
        "trigonometric",
        lambda x1, x2: np.sin(x1) * np.cos(2 * x2) + np.cos(x1 + x2),
        lambda x1, x2: (np.cos(x1) * np.cos(2 * x2) - np.sin(x1 + x2),
                        -2 * np.sin(x1) * np.sin(2 * x2) - np.sin(x1 + x2)),
    )


def _rational():
    def f(x1, x2):
        return 1.0 / (1.0 + x1**2 + 2 * x2**2) + x1

    def grad(x1, x2):
        q = (1.0 + x1**2 + 2 * x2**2) ** 2
        return 1.0 - 2 * x1 / q, -4 * x2 / q

    return Probe("rational", f, grad)


PROBES = {"polynomial": _poly, "trigonometric": _trig, "rational": _rational}


def probe(name: str) -> Probe:
    return PROBES[name]()


def taylor_P(ff: FrozenFrame, h: Probe, x) -> np.ndarray:
    """``h(x0) + e01(x) X1 h(x0) + (eps e02)(x) Y h(x0)`` with frozen coefficients."""
    x0 = ff.x0
    g = np.array([float(v) for v in h.grad(x0[0], x0[1])])
    x1h = ff.sigma[0] @ g
    yh = ff.sigma[1] @ g
    e01, ee02 = frozen_coords(ff, x)
    return float(h.f(x0[0], x0[1])) + e01 * x1h + ee02 * yh


def approximation_order(ff: FrozenFrame, h: Probe, alpha: float, radii, n_angles: int = 64) -> np.ndarray:
    """``max_{|x-x0|=r} |h(x) - P h(x)| / r^(1+alpha)`` for each radius."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be positive and strictly decreasing")
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    out = []
    for r in radii:
        x = (ff.x0[0] + r * np.cos(theta), ff.x0[1] + r * np.sin(theta))
        err = np.abs(h.f(*x) - taylor_P(ff, h, x))
        out.append(float(np.max(err)) / r ** (1.0 + alpha))
    return np.array(out)


# --- lifted fields -----------------------------------------------------------


@dataclass(frozen=True)
class LiftCheck:
    bracket: float         # [X3~, X1~] f
    double_bracket: float  # [X3~, [X3~, X1~]] f
    x2f: float             # X2~ f
    residue1: float        # |[X3~, X1~] f - (2s/eps) X2~ f|
    residue2: float        # |[X3~, [X3~, X1~]] f - (2/eps) X2~ f|


def _default_lift_probe(x1, x2, s):
    return np.sin(x1 + 0.5 * x2) * np.exp(0.3 * s) + x1 * x2 * s**3 + np.cos(x2 - s)


def lifted_fields_check(ctx: ProjectedContext, p, s: float, step: float = 1e-2,
                        f: Optional[Callable] = None) -> LiftCheck:
    """Evaluate both bracket identities of the lifted fields on a probe ``f(x1, x2, s)``.

    Every derivative is a central difference with ``step``; the coefficients
    are frozen at ``p`` (they do not depend on ``s``).
    """
    f = f or _default_lift_probe
    eps = ctx.eps
    u0 = float(bilinear(ctx.u, p[0], p[1]))
    s1 = np.array([float(v) for v in ctx.frame.s1(p[0], p[1], u0)])
    s2 = np.array([float(v) for v in ctx.frame.s2(p[0], p[1], u0)])
    h = step

    def S(fun):
        return lambda a, b, t: (fun(a, b, t + h) - fun(a, b, t - h)) / (2 * h)

    def grad(fun, a, b, t):
        return ((fun(a + h, b, t) - fun(a - h, b, t)) / (2 * h),
                (fun(a, b + h, t) - fun(a, b - h, t)) / (2 * h))

    def T(fun):
        # lifted X1: (sigma_1 + s^2 sigma_2) . grad_x
        def g(a, b, t):
            g1, g2 = grad(fun, a, b, t)
            return (s1[0] + t * t * s2[0]) * g1 + (s1[1] + t * t * s2[1]) * g2
        return g

    a, b = float(p[0]), float(p[1])
    b1 = S(T(f))(a, b, s) - T(S(f))(a, b, s)
    b2 = S(S(T(f)))(a, b, s) - 2 * S(T(S(f)))(a, b, s) + T(S(S(f)))(a, b, s)
    g1, g2 = grad(f, a, b, s)
    x2f = eps * (s2[0] * g1 + s2[1] * g2)
    return LiftCheck(float(b1), float(b2), float(x2f),
                     float(abs(b1 - 2 * s / eps * x2f)), float(abs(b2 - 2 / eps * x2f)))
