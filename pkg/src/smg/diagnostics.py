"""Discrete intrinsic Sobolev and Holder quantities.

Norms are built from words in ``X1u, X2u`` applied to grid functions and
integrated with the tensor trapezoidal rule; the uniformity sweep tabulates
them along a viscosity run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .errors import SubdomainTooLarge
from .grid import GridFunction, integrate
from .projected import ProjectedContext, commutator_omega, lipschitz_budget
from .solver import ViscosityRun, coefficients_a


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


@dataclass(frozen=True)
class CutoffFunction:
    """Tensor-product cutoff: 1 on ``inner``, 0 outside ``outer``, quintic blend between.

    Boxes are ``(c1, d1, c2, d2)`` with ``inner`` strictly inside ``outer``.
    The blend is C^2.
    """

    inner: tuple[float, float, float, float]
    outer: tuple[float, float, float, float]

    def __post_init__(self):
        i, o = self.inner, self.outer
        if not (o[0] < i[0] < i[1] < o[1] and o[2] < i[2] < i[3] < o[3]):
            raise ValueError("inner box must lie strictly inside the outer box")

    def __call__(self, x1, x2):
        i, o = self.inner, self.outer

        def one(x, lo_o, lo_i, hi_i, hi_o):
            up = _smoothstep((x - lo_o) / (lo_i - lo_o))
            down = 1.0 - _smoothstep((x - hi_i) / (hi_o - hi_i))
            return np.where(x < lo_i, up, np.where(x > hi_i, down, 1.0))

        return one(np.asarray(x1, float), o[0], i[0], i[1], o[1]) * one(np.asarray(x2, float), o[2], i[2], i[3], o[3])


@dataclass(frozen=True)
class NormReport:
    m: int
    p: float
    subdomain: Optional[tuple]
    value: float
    eps: float


def _words(ctx: ProjectedContext, z: np.ndarray, m: int):
    """All arrays ``X_{w1} ... X_{wj} z`` for words of length ``j <= m``."""
    level = [z]
    yield 0, z
    for j in range(1, m + 1):
        nxt = []
        for arr in level:
            for i in (1, 2):
                nxt.append(ctx.apply(i, arr))
        for arr in nxt:
            yield j, arr
        level = nxt


def _check_margin(grid, subdomain, m):
    if subdomain is None:
        if m > 0:
            raise SubdomainTooLarge("a derivative norm needs a subdomain inset from the boundary")
        return
    s1, s2 = grid.index_box(subdomain)
    if (s1.start < m or s2.start < m or grid.n1 - s1.stop < m or grid.n2 - s2.stop < m):
        raise SubdomainTooLarge(
            f"subdomain {subdomain} leaves fewer than {m} node layers to the boundary")
    c1, d1, c2, d2 = subdomain
    if c1 < grid.a1 or d1 > grid.b1 or c2 < grid.a2 or d2 > grid.b2:
        raise SubdomainTooLarge(f"subdomain {subdomain} is not contained in the grid")


def sobolev_norm(ctx: ProjectedContext, z: GridFunction, m: int, p: float, subdomain=None) -> NormReport:
    """``(sum over words w of length <= m of int_sub |w z|^p)^(1/p)``."""
    if m < 0 or p < 1:
        raise ValueError("need m >= 0 and p >= 1")
    _check_margin(z.grid, subdomain, m)
    total = 0.0
    for _, arr in _words(ctx, z.values, m):
        total += integrate(np.abs(arr) ** p, z.grid, subdomain)
    sub = tuple(subdomain) if subdomain is not None else None
    return NormReport(m, p, sub, total ** (1.0 / p), ctx.eps)


def _pair_offsets(n1, n2):
    offs = set()
    d = 1
    while d < max(n1, n2):
        for o in ((d, 0), (0, d), (d, d), (d, -d)):
            offs.add(o)
        d *= 2
    offs.update({(n1 - 1, 0), (0, n2 - 1), (n1 - 1, n2 - 1), (n1 - 1, -(n2 - 1))})
    return sorted(o for o in offs if abs(o[0]) < n1 and abs(o[1]) < n2 and o != (0, 0))


def holder_seminorm(z: GridFunction, alpha: float, subdomain=None, max_pairs: int = 200_000) -> float:
    """``max |z(x) - z(y)| / |x - y|^alpha`` over a deterministic set of node pairs.

    Pairs are all node pairs separated by the offsets ``(d,0), (0,d), (d,d),
    (d,-d)`` for ``d`` in powers of two and the full extents, topped up with
    Halton-sampled pairs; the set is thinned with a fixed stride if it exceeds
    ``max_pairs``. The result is a lower bound of the continuous seminorm.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    g = z.grid
    vals = z.values
    X1, X2 = g.mesh
    if subdomain is not None:
        s1, s2 = g.index_box(subdomain)
        vals, X1, X2 = vals[s1, s2], X1[s1, s2], X2[s1, s2]
    n1, n2 = vals.shape
    dz, dist = [], []
    for o1, o2 in _pair_offsets(n1, n2):
        a = (slice(0, n1 - o1), slice(max(0, -o2), n2 - max(0, o2)))
        b = (slice(o1, n1), slice(max(0, o2), n2 - max(0, -o2)))
        dz.append(np.abs(vals[b] - vals[a]).ravel())
        dist.append(np.hypot(X1[b] - X1[a], X2[b] - X2[a]).ravel())
    dz = np.concatenate(dz)
    dist = np.concatenate(dist)
    budget = max_pairs - dz.size
    if budget > 0:
        pts = qmc.Halton(d=2, scramble=False).random(budget + 1)[1:]
        flat = vals.ravel()
        ia = np.minimum((pts[:, 0] * flat.size).astype(int), flat.size - 1)
        ib = np.minimum((pts[:, 1] * flat.size).astype(int), flat.size - 1)
        keep = ia != ib
        ia, ib = ia[keep], ib[keep]
        dz = np.concatenate([dz, np.abs(flat[ia] - flat[ib])])
        dist = np.concatenate([dist, np.hypot(X1.ravel()[ia] - X1.ravel()[ib], X2.ravel()[ia] - X2.ravel()[ib])])
    elif budget < 0:
        stride = int(np.ceil(dz.size / max_pairs))
        dz, dist = dz[::stride], dist[::stride]
    if dz.size == 0:
        return 0.0
    return float(np.max(dz / dist**alpha))


def caccioppoli_sides(ctx: ProjectedContext, z: GridFunction, f: GridFunction, p: float,
                      phi: CutoffFunction) -> tuple[float, float, float]:
    """Both sides of the first Caccioppoli inequality as computed integrals.

    Returns ``(lhs, rhs1, rhs2)`` with ``lhs = int |grad_eps |z|^((p-1)/2)|^2 phi^(2p)``,
    ``rhs1 = int |z|^(p-1) (phi^2 + |grad_eps phi|^2) phi^(2p-2)`` and the signed
    ``rhs2 = int f |z|^(p-3) z phi^(2p)``.
    """
    if p < 3:
        raise ValueError("p must be at least 3")
    g = z.grid
    zv = z.values
    az = np.abs(zv)
    ph = g.sample(phi).values
    w1, w2 = ctx.gradient(az ** ((p - 1) / 2))
    lhs = integrate((w1**2 + w2**2) * ph ** (2 * p), g)
    q1, q2 = ctx.gradient(ph)
    rhs1 = integrate(az ** (p - 1) * (ph**2 + q1**2 + q2**2) * ph ** (2 * p - 2), g)
    rhs2 = integrate(f.values * az ** (p - 3) * zv * ph ** (2 * p), g)
    return lhs, rhs1, rhs2


def first_derivative_rhs(ctx: ProjectedContext) -> tuple[GridFunction, GridFunction]:
    """``(z, f)`` with ``z = X1u u`` and ``f`` the right-hand side of the equation ``z`` solves.

    ``f = -X_i (A_i2 omega^l X_l u) - omega^l X_l (X_2 u / W)`` with
    ``A_ij = a_ij / W``; only ``omega^l_{1,2} = omega^l`` is nonzero for ``k = 1``.
    """
    u = ctx.u.values
    g1, g2 = ctx.gradient(u)
    W = np.sqrt(1.0 + g1**2 + g2**2)
    a = coefficients_a((g1, g2))
    w1, w2 = (w.values for w in commutator_omega(ctx))
    lie = w1 * g1 + w2 * g2  # omega^l X_l u
    f = -(ctx.x1(a.a12 / W * lie) + ctx.x2(a.a22 / W * lie))
    q = g2 / W
    f -= w1 * ctx.x1(q) + w2 * ctx.x2(q)
    return ctx.u.with_values(g1), ctx.u.with_values(f)


@dataclass(frozen=True)
class SweepRow:
    eps: float
    m: int
    p: float
    norm_u: float
    norm_Yu: float
    lip_X1u: float
    lip_Yu: float


@dataclass(frozen=True)
class UniformitySweep:
    rows: tuple[SweepRow, ...]
    reports: tuple[tuple[NormReport, NormReport], ...]
    ratio_u: float
    ratio_Yu: float
    factor: float

    @property
    def uniform(self) -> bool:
        return self.ratio_u <= self.factor and self.ratio_Yu <= self.factor


def _ratio(vals):
    lo, hi = min(vals), max(vals)
    if hi == 0.0:
        return 1.0
    return float("inf") if lo == 0.0 else hi / lo


def uniformity_sweep(run: ViscosityRun, m: int, p: float, subdomain, factor: float = 3.0,
                     m_y: Optional[int] = None) -> UniformitySweep:
    """``W^{m,p}`` norms of ``u`` and ``W^{m_y,p}`` norms of ``Yu u`` at every stage.

    ``m_y`` defaults to ``m - 1``. The sweep is flagged non-uniform when the
    max/min ratio of either column exceeds ``factor``.
    """
    if run.frame is None:
        raise ValueError("viscosity run carries no frame")
    m_y = max(m - 1, 0) if m_y is None else m_y
    rows, reports = [], []
    for eps, res in zip(run.schedule, run.results):
        ctx = ProjectedContext(run.frame, res.u, eps)
        nu = sobolev_norm(ctx, res.u, m, p, subdomain)
        yu = res.u.with_values(ctx.y(res.u.values))
        ny = sobolev_norm(ctx, yu, m_y, p, subdomain)
        lx, ly = lipschitz_budget(ctx)
        reports.append((nu, ny))
        rows.append(SweepRow(eps, m, p, nu.value, ny.value, lx, ly))
    return UniformitySweep(tuple(rows), tuple(reports),
                           _ratio([r.norm_u for r in rows]), _ratio([r.norm_Yu for r in rows]), factor)


__all__ = [
    "CutoffFunction", "NormReport", "sobolev_norm", "holder_seminorm", "caccioppoli_sides",
    "first_derivative_rhs", "SweepRow", "UniformitySweep", "uniformity_sweep",
]

