"""Optional PNG figures written next to the CSVs (``--figures``).

The CSVs are the data contract; these renderings are a convenience and
are not part of the determinism guarantee.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_solution(gf, path, title="u"):
    X1, X2 = gf.grid.mesh
    fig, ax = plt.subplots(figsize=(5, 4.2))
    cs = ax.contourf(X1, X2, gf.values, levels=24, cmap="viridis")
    fig.colorbar(cs, ax=ax)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(title)
    ax.set_aspect("equal")
    return _save(fig, path)


def plot_residuals(histories, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for k, h in enumerate(histories):
        ax.semilogy(np.arange(len(h)), np.maximum(h, 1e-300), label=f"stage {k}")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("sup residual")
    if len(histories) > 1:
        ax.legend(fontsize=7)
    return _save(fig, path)


def plot_leaves(leaves, grid, path, background=None):
    fig, ax = plt.subplots(figsize=(5, 4.2))
    if background is not None:
        X1, X2 = grid.mesh
        ax.contourf(X1, X2, background.values, levels=24, cmap="Greys", alpha=0.5)
    for leaf in leaves:
        if leaf is not None:
            ax.plot(leaf.points[:, 0], leaf.points[:, 1], lw=0.8)
            ax.plot(*leaf.seed, "k.", ms=3)
    ax.set_xlim(grid.a1, grid.b1)
    ax.set_ylim(grid.a2, grid.b2)
    ax.set_aspect("equal")
    ax.set_title("leaves of X1u")
    return _save(fig, path)


def plot_order(radii, ratios: dict, path, title=""):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for alpha, r in ratios.items():
        ax.loglog(radii, r, "o-", label=f"alpha={alpha:g}")
    ax.invert_xaxis()
    ax.set_xlabel("radius")
    ax.set_ylabel("remainder / r^(1+alpha)")
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_sweep(sweep, path):
    eps = [r.eps for r in sweep.rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogx(eps, [r.norm_u for r in sweep.rows], "o-", label="norm u")
    ax.semilogx(eps, [r.norm_Yu for r in sweep.rows], "s-", label="norm Yu u")
    ax.set_xlabel("eps")
    ax.legend(fontsize=7)
    return _save(fig, path)
