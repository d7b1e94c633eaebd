"""Leaves of the horizontal foliation: integral curves of ``X1u``.

Along every leaf a minimal graph is affine, so the second difference of
``u`` along the leaf is the natural defect to report.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SeedOutsideDomain, TooFewSamples
from .grid import bilinear
from .projected import ProjectedContext

LEFT_DOMAIN = "left domain"
EXHAUSTED = "t-range exhausted"


@dataclass(frozen=True)
class Leaf:
    seed: tuple[float, float]
    dt: float
    t: np.ndarray
    points: np.ndarray  # shape (N, 2)
    u: np.ndarray
    exit_backward: str
    exit_forward: str

    def __len__(self):
        return self.t.size


@dataclass(frozen=True)
class FoliationReport:
    seeds: tuple[tuple[float, float], ...]
    residuals: tuple[Optional[float], ...]  # None where the leaf failed
    errors: dict  # leaf index -> message

    @property
    def global_max(self) -> float:
        vals = [r for r in self.residuals if r is not None]
        return max(vals) if vals else 0.0


def _evaluator(ctx: ProjectedContext, u_func: Optional[Callable]):
    if u_func is not None:
        return u_func
    return lambda p1, p2: bilinear(ctx.u, p1, p2)


def _march(ctx, ufun, seeds: np.ndarray, t_end, dt):
    """RK4 from every seed over ``[0, t_end]`` with signed step ``dt``.

    Seeds are advanced together; each one stops at the last sample whose four
    RK4 stages stay inside the grid rectangle.
    """
    g = ctx.grid
    frame = ctx.frame

    def rhs(p):
        return frame.s1(p[:, 0], p[:, 1], ufun(p[:, 0], p[:, 1])).T

    def inside(p):
        return (p[:, 0] >= g.a1) & (p[:, 0] <= g.b1) & (p[:, 1] >= g.a2) & (p[:, 1] <= g.b2)

    nsteps = int(np.floor(abs(t_end) / abs(dt) + 1e-9))
    p = np.array(seeds, dtype=float).reshape(-1, 2)
    paths = [[q.copy()] for q in p]
    active = np.ones(p.shape[0], dtype=bool)
    reasons = [EXHAUSTED] * p.shape[0]
    for _ in range(nsteps):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        q = p[idx]
        ok = np.ones(idx.size, dtype=bool)
        k1 = rhs(q)
        q2 = q + 0.5 * dt * k1
        ok &= inside(q2)
        k2 = rhs(np.where(ok[:, None], q2, q))
        q3 = q + 0.5 * dt * k2
        ok &= inside(q3)
        k3 = rhs(np.where(ok[:, None], q3, q))
        q4 = q + dt * k3
        ok &= inside(q4)
        k4 = rhs(np.where(ok[:, None], q4, q))
        nxt = q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ok &= inside(nxt)
        for k, i in enumerate(idx):
            if ok[k]:
                paths[i].append(nxt[k].copy())
            else:
                reasons[i] = LEFT_DOMAIN
        p[idx[ok]] = nxt[ok]
        active[idx[~ok]] = False
    return paths, reasons


def _leaves(ctx, ufun, seeds, t_min, t_max, dt):
    fwd, r_fwd = _march(ctx, ufun, seeds, t_max, dt)
    bwd, r_bwd = _march(ctx, ufun, seeds, t_min, -dt)
    out = []
    for k, seed in enumerate(seeds):
        pts = np.array(bwd[k][:0:-1] + fwd[k])
        nb = len(bwd[k]) - 1
        t = (np.arange(pts.shape[0]) - nb) * dt
        u = np.broadcast_to(np.asarray(ufun(pts[:, 0], pts[:, 1]), dtype=float), t.shape).copy()
        out.append(Leaf(tuple(seed), dt, t, pts, u, r_bwd[k], r_fwd[k]))
    return out


def _span(t_span, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if np.ndim(t_span) == 0:
        t_span = (0.0, float(t_span))
    t_min, t_max = float(t_span[0]), float(t_span[1])
    if not t_min <= 0.0 <= t_max:
        raise ValueError("t_span must contain 0")
    return t_min, t_max


def integrate_leaf(ctx: ProjectedContext, seed, t_span, dt: float,
                   u_func: Optional[Callable] = None) -> Leaf:
    """Classical RK4 for ``gamma' = sigma_1(gamma, u(gamma))`` through ``seed``.

    ``t_span`` is ``(t_min, t_max)`` with ``t_min <= 0 <= t_max`` (a single
    number ``T`` means ``(0, T)``). ``u`` is interpolated bilinearly from the
    grid unless an exact ``u_func(x1, x2)`` is supplied. Leaves stop at the
    last sample whose RK4 stages all stay inside the grid rectangle.
    """
    t_min, t_max = _span(t_span, dt)
    seed = (float(seed[0]), float(seed[1]))
    if not ctx.grid.contains(seed):
        raise SeedOutsideDomain(f"seed {seed} lies outside the domain")
    return _leaves(ctx, _evaluator(ctx, u_func), [seed], t_min, t_max, dt)[0]


def leaf_affinity_residual(leaf: Leaf) -> float:
    """``max |u(t+dt) - 2u(t) + u(t-dt)| / dt^2`` over interior samples."""
    if len(leaf) < 3:
        raise TooFewSamples(f"leaf through {leaf.seed} has {len(leaf)} samples, need at least 3")
    u = leaf.u
    return float(np.max(np.abs(u[2:] - 2.0 * u[1:-1] + u[:-2])) / leaf.dt**2)


def seed_lattice(box, rows: int, cols: int, margin: float = 0.1) -> list[tuple[float, float]]:
    """``rows x cols`` seeds spread uniformly over ``box``, inset by ``margin`` of its extent."""
    a1, b1, a2, b2 = box
    w1, w2 = b1 - a1, b2 - a2
    xs = np.linspace(a1 + margin * w1, b1 - margin * w1, cols)
    ys = np.linspace(a2 + margin * w2, b2 - margin * w2, rows)
    return [(float(x), float(y)) for y in ys for x in xs]


def foliate(ctx: ProjectedContext, seeds: Sequence, t_span, dt: float,
            u_func: Optional[Callable] = None, threads: int = 1):
    """Integrate a leaf through every seed and collect affinity residuals.

    A failing seed does not stop the run: its leaf is ``None`` and the
    report records the error message under the seed index.
    """
    t_min, t_max = _span(t_span, dt)
    seeds = [(float(s[0]), float(s[1])) for s in seeds]
    ufun = _evaluator(ctx, u_func)
    errors = {}
    good = []
    for k, seed in enumerate(seeds):
        if ctx.grid.contains(seed):
            good.append(k)
        else:
            errors[k] = f"SeedOutsideDomain: seed {seed} lies outside the domain"
    chunks = [good[i::threads] for i in range(max(1, threads))]

    def run(chunk):
        return _leaves(ctx, ufun, [seeds[k] for k in chunk], t_min, t_max, dt) if chunk else []

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    leaves = [None] * len(seeds)
    for chunk, out in zip(chunks, results):
        for k, leaf in zip(chunk, out):
            leaves[k] = leaf
    residuals = [None] * len(seeds)
    for k in good:
        try:
            residuals[k] = leaf_affinity_residual(leaves[k])
        except TooFewSamples as exc:
            errors[k] = f"TooFewSamples: {exc}"
    report = FoliationReport(tuple(seeds), tuple(residuals), dict(sorted(errors.items())))
    return leaves, report
