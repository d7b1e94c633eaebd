"""CSV artifacts.

Every file is written to a temporary sibling and moved into place with
``os.replace``, so readers never see a partial file. Floats use 17
significant digits, enough to round-trip any double exactly.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .grid import GridFunction, grid_from_nodes, sig17


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return sig17(float(v))
    if v is None:
        return ""
    return str(v)


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return write_atomic(path, buf.getvalue())


def read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def write_grid_function(path, gf: GridFunction) -> Path:
    """``x1,x2,value`` rows, x1 index outer."""
    X1, X2 = gf.grid.mesh
    rows = zip(X1.ravel(), X2.ravel(), gf.values.ravel())
    return write_rows(path, ("x1", "x2", "value"), rows)


def read_grid_function(path) -> GridFunction:
    header, rows = read_rows(path)
    if header != ["x1", "x2", "value"]:
        raise ConfigError(f"{path}: expected header x1,x2,value, got {','.join(header)}")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 3:
        raise ConfigError(f"{path}: malformed rows")
    x1 = np.unique(data[:, 0])
    x2 = np.unique(data[:, 1])
    if x1.size * x2.size != data.shape[0]:
        raise ConfigError(f"{path}: nodes do not form a tensor grid")
    try:
        grid = grid_from_nodes(x1, x2)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    order = np.lexsort((data[:, 1], data[:, 0]))
    values = data[order, 2].reshape(x1.size, x2.size)
    return GridFunction(grid, values)


def write_residuals(path, histories: Sequence[Sequence[float]]) -> Path:
    rows = ((k, i, r) for k, h in enumerate(histories) for i, r in enumerate(h))
    return write_rows(path, ("stage", "iter", "sup_residual"), rows)


def write_leaves(path, leaves) -> Path:
    rows = []
    for k, leaf in enumerate(leaves):
        if leaf is None:
            continue
        for t, (a, b), u in zip(leaf.t, leaf.points, leaf.u):
            rows.append((k, float(t), float(a), float(b), float(u)))
    return write_rows(path, ("leaf_id", "t", "x1", "x2", "u"), rows)


def write_foliation_report(path, report) -> Path:
    """``leaf_id,max_residual``; failed leaves leave the residual empty and carry the error."""
    rows = []
    for k, r in enumerate(report.residuals):
        rows.append((k, r if r is None else float(r), report.errors.get(k, "")))
    return write_rows(path, ("leaf_id", "max_residual", "error"), rows)


def write_sweep(path, sweep) -> Path:
    cols = ("eps", "m", "p", "norm_u", "norm_Yu", "lip_X1u", "lip_Yu")
    rows = [(float(r.eps), r.m, float(r.p), float(r.norm_u), float(r.norm_Yu),
             float(r.lip_X1u), float(r.lip_Yu)) for r in sweep.rows]
    return write_rows(path, cols, rows)
