"""Regularized minimal graph equation and vanishing viscosity continuation.

The regularized equation ``X_{i,u}(X_{i,u} u / W) = 0``, ``W = sqrt(1 + |grad_eps u|^2)``,
is solved in its nondivergence form ``a_ij(grad_eps u) X_{i,u} X_{j,u} u = 0`` by a
lagged-coefficient (Picard) iteration. At each outer step the coefficients
``a_ij`` and the third argument of ``sigma`` are frozen at the current iterate,
the resulting linear operator is assembled on a compact 9-point stencil and
solved for the interior values with Dirichlet data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonConvergence
from .frames import Frame, rank_determinant
from .grid import Grid, GridFunction, d1, d2, integrate, second_derivatives, transfinite
from .projected import ProjectedContext, lipschitz_budget

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoefficientMatrix:
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray

    @property
    def a21(self):
        return self.a12

    def eigenvalues(self) -> tuple[np.ndarray, np.ndarray]:
        """Closed-form eigenvalues ``(lo, hi)`` of the symmetric 2x2 matrix."""
        mean = 0.5 * (self.a11 + self.a22)
        rad = np.hypot(0.5 * (self.a11 - self.a22), self.a12)
        return mean - rad, mean + rad


def coefficients_a(nu) -> CoefficientMatrix:
    """``a_ij(nu) = delta_ij - nu_i nu_j / (1 + |nu|^2)``; ``nu`` may hold arrays."""
    n1 = np.asarray(nu[0], dtype=float)
    n2 = np.asarray(nu[1], dtype=float)
    q = 1.0 + n1 * n1 + n2 * n2
    return CoefficientMatrix(1.0 - n1 * n1 / q, -n1 * n2 / q, 1.0 - n2 * n2 / q)


@dataclass(frozen=True)
class SolverConfig:
    max_outer_iters: int = 500
    theta: float = 0.8
    residual_tol: Optional[float] = None  # default 1e-9 * (1 + |g|_inf)
    update_tol: float = 1e-14
    linear_solver: str = "direct"  # or "rbgs"
    sweeps: int = 20000
    linear_tol: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        if self.residual_tol is not None and not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if not self.update_tol > 0 or not self.linear_tol > 0:
            raise ValueError("tolerances must be positive")
        if self.max_outer_iters < 1 or self.sweeps < 1:
            raise ValueError("iteration counts must be positive")
        if self.linear_solver not in ("direct", "rbgs"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")


@dataclass(frozen=True)
class SolverResult:
    u: GridFunction
    residual_history: tuple[float, ...]
    converged: bool
    iterations: int
    eps: float


@dataclass(frozen=True)
class ViscosityRun:
    schedule: tuple[float, ...]
    results: tuple[SolverResult, ...]
    budgets: tuple[tuple[float, float], ...]
    lipschitz_cap: Optional[float] = None
    over_cap: tuple[int, ...] = field(default=())
    frame: Optional[Frame] = None

    @property
    def final(self) -> SolverResult:
        return self.results[-1]


# --- operators -------------------------------------------------------------


def _coefficients(ctx: ProjectedContext, u: np.ndarray):
    """Principal and first-order coefficients of ``a_ij X_i X_j``.

    ``X_i X_j z = b_i^p b_j^q d_pq z + (X_i b_j^q) d_q z`` with ``b_i`` the
    coefficient vector of ``X_{i,u}``.
    """
    nu = ctx.gradient(u)
    a = coefficients_a(nu)
    aij = ((a.a11, a.a12), (a.a12, a.a22))
    b = (ctx.field(1), ctx.field(2))
    A = np.zeros((2, 2) + u.shape)
    C = np.zeros((2,) + u.shape)
    for i in range(2):
        for j in range(2):
            w = aij[i][j]
            for p in range(2):
                for q in range(2):
                    A[p, q] += w * b[i][p] * b[j][q]
            for q in range(2):
                C[q] += w * ctx.apply(i + 1, b[j][q])
    return A, C


def _apply_operator(A, C, z: np.ndarray, grid: Grid) -> np.ndarray:
    z11, z12, z22 = second_derivatives(z, grid)
    return (A[0, 0] * z11 + 2.0 * A[0, 1] * z12 + A[1, 1] * z22
            + C[0] * d1(z, grid) + C[1] * d2(z, grid))


def residual_nondivergence(ctx: ProjectedContext, u: GridFunction) -> GridFunction:
    """``a_ij(grad_eps u) X_{i,u} X_{j,u} u`` on the compact stencil."""
    A, C = _coefficients(ctx, u.values)
    return u.with_values(_apply_operator(A, C, u.values, u.grid))


def residual_divergence(ctx: ProjectedContext, u: GridFunction) -> GridFunction:
    """``X_{i,u}(X_{i,u} u / W)`` by applying the discrete fields twice."""
    g1, g2 = ctx.gradient(u.values)
    W = np.sqrt(1.0 + g1 * g1 + g2 * g2)
    return u.with_values(ctx.x1(g1 / W) + ctx.x2(g2 / W))


def area_functional(ctx: ProjectedContext, u: GridFunction, regularized: bool = False) -> float:
    """Trapezoidal quadrature of ``sqrt(1 + |X1u u|^2)`` (or ``|grad_eps u|^2``)."""
    g1, g2 = ctx.gradient(u.values)
    density = 1.0 + g1 * g1 + (g2 * g2 if regularized else 0.0)
    return integrate(np.sqrt(density), u.grid)


# --- linear solves ---------------------------------------------------------


def _stencil(A, C, grid: Grid):
    """Nine-point stencil weights at interior nodes, keyed by offset."""
    h1, h2 = grid.h1, grid.h2
    s = (slice(1, -1), slice(1, -1))
    a11, a12, a22 = A[0, 0][s], A[0, 1][s], A[1, 1][s]
    c1, c2 = C[0][s], C[1][s]
    cross = 2.0 * a12 / (4.0 * h1 * h2)
    return {
        (0, 0): -2.0 * a11 / h1**2 - 2.0 * a22 / h2**2,
        (1, 0): a11 / h1**2 + c1 / (2.0 * h1),
        (-1, 0): a11 / h1**2 - c1 / (2.0 * h1),
        (0, 1): a22 / h2**2 + c2 / (2.0 * h2),
        (0, -1): a22 / h2**2 - c2 / (2.0 * h2),
        (1, 1): cross,
        (-1, -1): cross,
        (1, -1): -cross,
        (-1, 1): -cross,
    }


def _solve_direct(stencil, boundary: np.ndarray, grid: Grid) -> np.ndarray:
    m1, m2 = grid.n1 - 2, grid.n2 - 2
    N = m1 * m2
    idx = np.arange(N).reshape(m1, m2)
    rows, cols, vals = [], [], []
    rhs = np.zeros((m1, m2))
    I, J = np.meshgrid(np.arange(m1), np.arange(m2), indexing="ij")
    for (di, dj), w in stencil.items():
        ti, tj = I + di, J + dj
        inside = (ti >= 0) & (ti < m1) & (tj >= 0) & (tj < m2)
        rows.append(idx[inside])
        cols.append(idx[ti[inside], tj[inside]])
        vals.append(w[inside])
        # neighbours on the boundary: move known Dirichlet values to the rhs
        out = ~inside
        rhs[out] -= w[out] * boundary[ti[out] + 1, tj[out] + 1]
    M = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    sol = spla.spsolve(M, rhs.ravel())
    return sol.reshape(m1, m2)


def _solve_rbgs(stencil, boundary: np.ndarray, guess: np.ndarray, grid: Grid, sweeps: int, tol: float):
    """Red-black Gauss-Seidel on the 9-point stencil.

    Nodes of one colour are updated together; corner neighbours share the
    colour, so those couplings use the values from the previous half sweep.
    """
    z = guess.copy()
    z[grid.boundary_mask] = boundary[grid.boundary_mask]
    m1, m2 = grid.n1 - 2, grid.n2 - 2
    I, J = np.meshgrid(np.arange(1, m1 + 1), np.arange(1, m2 + 1), indexing="ij")
    colours = [((I + J) % 2) == k for k in (0, 1)]
    diag = stencil[(0, 0)]
    offs = [k for k in stencil if k != (0, 0)]
    scale = np.max(np.abs(diag))
    for sweep in range(sweeps):
        for mask in colours:
            acc = np.zeros((m1, m2))
            for di, dj in offs:
                acc += stencil[(di, dj)] * z[1 + di:m1 + 1 + di, 1 + dj:m2 + 1 + dj]
            inner = z[1:-1, 1:-1]
            inner[mask] = (-acc / diag)[mask]
        if sweep % 10 == 9 or sweep == sweeps - 1:
            r = diag * z[1:-1, 1:-1]
            for di, dj in offs:
                r = r + stencil[(di, dj)] * z[1 + di:m1 + 1 + di, 1 + dj:m2 + 1 + dj]
            if np.max(np.abs(r)) <= tol * scale * (1.0 + np.max(np.abs(z))):
                break
    return z[1:-1, 1:-1]


# --- nonlinear solve -------------------------------------------------------

BoundaryData = Union[Callable, GridFunction, np.ndarray]


def boundary_values(grid: Grid, g: BoundaryData) -> np.ndarray:
    """Full-grid array whose boundary rows hold the Dirichlet data."""
    if isinstance(g, GridFunction):
        if g.grid != grid:
            raise ValueError("boundary data lives on a different grid")
        vals = np.array(g.values)
    elif callable(g):
        vals = grid.sample(g).values.copy()
    else:
        vals = np.array(g, dtype=float)
        if vals.shape != grid.shape:
            raise ValueError("boundary array does not match the grid")
    if not np.all(np.isfinite(vals[grid.boundary_mask])):
        raise ValueError("boundary data must be finite")
    return vals


def _interior_residual(frame, eps, u: np.ndarray, grid: Grid) -> float:
    ctx = ProjectedContext(frame, GridFunction(grid, u), eps)
    A, C = _coefficients(ctx, u)
    r = _apply_operator(A, C, u, grid)
    return float(np.max(np.abs(r[1:-1, 1:-1])))


def solve_regularized(frame: Frame, grid: Grid, eps: float, g: BoundaryData,
                      u0: Optional[BoundaryData] = None,
                      cfg: Optional[SolverConfig] = None,
                      raise_on_failure: bool = True) -> SolverResult:
    """Solve ``L_{eps,u} u = 0`` with Dirichlet data ``g``.

    ``u0`` defaults to the transfinite interpolation of the boundary data.
    Raises :class:`NonConvergence` (carrying the last iterate) when the
    residual tolerance is not met, unless ``raise_on_failure`` is false.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    cfg = cfg or SolverConfig()
    bvals = boundary_values(grid, g)
    mask = grid.boundary_mask
    if u0 is None:
        u = transfinite(grid, bvals)
    else:
        u = boundary_values(grid, u0).copy()
        u[mask] = bvals[mask]
    tol = cfg.residual_tol
    if tol is None:
        tol = 1e-9 * (1.0 + float(np.max(np.abs(bvals[mask]))))

    X1, X2 = grid.mesh
    history = []
    converged = False
    it = 0
    while True:
        rank_determinant(frame, (X1, X2, u))
        ctx = ProjectedContext(frame, GridFunction(grid, u), eps)
        A, C = _coefficients(ctx, u)
        res = float(np.max(np.abs(_apply_operator(A, C, u, grid)[1:-1, 1:-1])))
        history.append(res)
        if res <= tol:
            converged = True
            break
        if it >= cfg.max_outer_iters:
            break
        st = _stencil(A, C, grid)
        if cfg.linear_solver == "direct":
            new = _solve_direct(st, bvals, grid)
        else:
            new = _solve_rbgs(st, bvals, u, grid, cfg.sweeps, cfg.linear_tol)
        step = cfg.theta * (new - u[1:-1, 1:-1])
        u = u.copy()
        u[1:-1, 1:-1] += step
        it += 1
        if float(np.max(np.abs(step))) <= cfg.update_tol:
            history.append(_interior_residual(frame, eps, u, grid))
            converged = history[-1] <= tol
            break

    result = SolverResult(GridFunction(grid, u), tuple(history), converged, it, float(eps))
    log.debug("eps=%g iterations=%d residual=%.3e converged=%s", eps, it, history[-1], converged)
    if not converged and raise_on_failure:
        raise NonConvergence(
            f"no convergence at eps={eps:g} after {it} iterations (residual {history[-1]:.3e} > {tol:.3e})",
            result=result)
    return result


def viscosity_continuation(frame: Frame, grid: Grid, g: BoundaryData, schedule: Sequence[float],
                           cfg: Optional[SolverConfig] = None,
                           lipschitz_cap: Optional[float] = None) -> ViscosityRun:
    """Solve along a decreasing eps schedule, warm-starting every stage.

    Stages whose Lipschitz budget ``|X1u u| + |Yu u|`` exceeds
    ``lipschitz_cap`` are listed in ``ViscosityRun.over_cap``.
    """
    schedule = tuple(float(e) for e in schedule)
    if not schedule:
        raise ValueError("empty eps schedule")
    if any(not e > 0 for e in schedule):
        raise ValueError("eps schedule must be positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    results, budgets, over = [], [], []
    warm = None
    for k, eps in enumerate(schedule):
        try:
            res = solve_regularized(frame, grid, eps, g, u0=warm, cfg=cfg)
        except NonConvergence as exc:
            exc.stage = k
            raise NonConvergence(f"stage {k} (eps={eps:g}): {exc}", result=exc.result, stage=k) from exc
        results.append(res)
        budget = lipschitz_budget(ProjectedContext(frame, res.u, eps))
        budgets.append(budget)
        if lipschitz_cap is not None and sum(budget) > lipschitz_cap:
            over.append(k)
        warm = res.u
    return ViscosityRun(schedule, tuple(results), tuple(budgets), lipschitz_cap, tuple(over), frame)


def burgers_solution(x1, x2):
    """``x2 / (x1 + 2)``: an exact Heisenberg solution for every eps on ``x1 > -2``."""
    return x2 / (x1 + 2.0)


def sup_error(u: GridFunction, exact: Callable) -> float:
    return float(np.max(np.abs(u.values - u.grid.sample(exact).values)))


__all__ = [
    "CoefficientMatrix", "coefficients_a", "SolverConfig", "SolverResult", "ViscosityRun",
    "residual_nondivergence", "residual_divergence", "area_functional",
    "solve_regularized", "viscosity_continuation", "boundary_values", "burgers_solution", "sup_error",
]
