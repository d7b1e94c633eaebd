from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smg.diagnostics import (CutoffFunction, caccioppoli_sides, first_derivative_rhs, holder_seminorm,
                             sobolev_norm, uniformity_sweep)
from smg.errors import SubdomainTooLarge
from smg.frames import builtin
from smg.grid import Grid
from smg.projected import ProjectedContext
from smg.solver import burgers_solution, viscosity_continuation

H = builtin("heisenberg")
E2 = builtin("roto_translation")
UNIT = (0.0, 1.0, 0.0, 1.0)


def padded_unit(n_inside=32, pad=4):
    """Grid on a box around the unit square whose nodes hit its edges."""
    h = 1.0 / n_inside
    return Grid(-pad * h, 1 + pad * h, -pad * h, 1 + pad * h, n_inside + 2 * pad + 1, n_inside + 2 * pad + 1)


def zero_ctx(g, frame=H, eps=0.1):
    return ProjectedContext(frame, g.sample(lambda a, b: 0 * a), eps)


def test_sobolev_zero():
    g = padded_unit()
    c = zero_ctx(g)
    assert sobolev_norm(c, g.sample(lambda a, b: 0 * a), 2, 2, UNIT).value == 0.0


def test_sobolev_linear_example():
    g = padded_unit()
    c = zero_ctx(g)
    z = g.sample(lambda a, b: a)
    # orders 0 and 1: int x1^2 (trapezoid, error h^2/6) + int 1
    expected = math.sqrt(1 / 3 + g.h1**2 / 6 + 1)
    r1 = sobolev_norm(c, z, 1, 2, UNIT)
    assert r1.value == pytest.approx(expected, rel=1e-12)
    assert (r1.m, r1.p, r1.subdomain, r1.eps) == (1, 2, UNIT, 0.1)
    r2 = sobolev_norm(c, z, 2, 2, UNIT)
    assert r2.value == pytest.approx(expected, rel=1e-12)


def test_sobolev_margin():
    g = Grid.square(0, 1, 33)
    c = zero_ctx(g)
    z = g.sample(lambda a, b: a)
    with pytest.raises(SubdomainTooLarge):
        sobolev_norm(c, z, 1, 2, UNIT)
    with pytest.raises(SubdomainTooLarge):
        sobolev_norm(c, z, 1, 2, None)
    with pytest.raises(SubdomainTooLarge):
        sobolev_norm(c, z, 3, 2, (2 / 32, 1 - 2 / 32, 0.25, 0.75))
    assert sobolev_norm(c, z, 0, 2, None).value > 0


@settings(max_examples=20, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(1, 6))
def test_sobolev_monotone(a, b, p):
    g = Grid.square(-1, 1, 33)
    c = ProjectedContext(E2, g.sample(lambda x, y: 0.3 * x * y), 0.2)
    z = g.sample(lambda x, y: np.sin(a * x + b * y) + x)
    inner, outer = (-0.5, 0.5, -0.5, 0.5), (-0.75, 0.75, -0.75, 0.75)
    n = [sobolev_norm(c, z, m, p, outer).value for m in range(3)]
    assert n[0] <= n[1] <= n[2]
    assert sobolev_norm(c, z, 2, p, inner).value <= n[2]


def test_holder_examples():
    g = Grid.square(0, 1, 33)
    assert holder_seminorm(g.sample(lambda a, b: 3 + 0 * a), 0.5) == 0.0
    assert holder_seminorm(g.sample(lambda a, b: a), 0.5) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        holder_seminorm(g.sample(lambda a, b: a), 1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(0.1, 3))
def test_holder_lipschitz_bound(alpha, L):
    g = Grid.square(0, 1, 25)
    z = g.sample(lambda a, b: L * np.sin(a + b) / math.sqrt(2))
    d = math.sqrt(2)
    assert holder_seminorm(z, alpha) <= L * d ** (1 - alpha) + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(-4, 4), st.floats(-5, 5), st.floats(0.1, 0.9))
def test_holder_homogeneous_subadditive(k, c, alpha):
    g = Grid.square(-1, 1, 21)
    z = g.sample(lambda a, b: np.cos(3 * a) * b)
    w = g.sample(lambda a, b: a * a - b)
    base = holder_seminorm(z, alpha)
    s = 2.0**k
    assert holder_seminorm(z.with_values(s * z.values), alpha) == s * base
    assert holder_seminorm(z.with_values(c * z.values), alpha) == pytest.approx(abs(c) * base, rel=1e-13, abs=1e-300)
    zw = z.with_values(z.values + w.values)
    assert holder_seminorm(zw, alpha) <= base + holder_seminorm(w, alpha) + 1e-12


def test_holder_deterministic_and_capped():
    g = Grid.square(0, 1, 65)
    z = g.sample(lambda a, b: np.sqrt(np.abs(a - 0.5)) + b)
    assert holder_seminorm(z, 0.5, max_pairs=5000) == holder_seminorm(z, 0.5, max_pairs=5000)
    assert holder_seminorm(z, 0.5, max_pairs=5000) <= holder_seminorm(z, 0.5) + 1e-15


def test_cutoff_properties():
    phi = CutoffFunction((-0.3, 0.3, -0.2, 0.2), (-0.8, 0.8, -0.7, 0.7))
    x = np.linspace(-1, 1, 401)
    X, Y = np.meshgrid(x, x, indexing="ij")
    v = phi(X, Y)
    assert v.min() >= 0 and v.max() <= 1
    assert np.all(v[(np.abs(X) <= 0.3) & (np.abs(Y) <= 0.2)] == 1)
    assert np.all(v[(np.abs(X) >= 0.8) | (np.abs(Y) >= 0.7)] == 0)
    # C^1 across the blend: one-sided slopes agree at the junctions
    h = 1e-7
    for x0 in (-0.8, -0.3, 0.3, 0.8):
        left = (phi(x0, 0.0) - phi(x0 - h, 0.0)) / h
        right = (phi(x0 + h, 0.0) - phi(x0, 0.0)) / h
        assert abs(left - right) < 1e-5
    with pytest.raises(ValueError):
        CutoffFunction((-1, 1, -1, 1), (-0.5, 0.5, -0.5, 0.5))


PHI = CutoffFunction((-0.3, 0.3, -0.3, 0.3), (-0.7, 0.7, -0.7, 0.7))


def test_caccioppoli_trivial_cases():
    g = Grid.square(-1, 1, 33)
    c = zero_ctx(g)
    zero = g.sample(lambda a, b: 0 * a)
    assert caccioppoli_sides(c, zero, zero, 3, PHI) == (0.0, 0.0, 0.0)
    k = 1.5
    const = g.sample(lambda a, b: k + 0 * a)
    lhs, rhs1, rhs2 = caccioppoli_sides(c, const, zero, 3, PHI)
    assert lhs == 0.0 and rhs1 > 0 and rhs2 == 0.0
    with pytest.raises(ValueError):
        caccioppoli_sides(c, const, zero, 2, PHI)


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 2), st.floats(3, 6))
def test_caccioppoli_symmetries(a, p):
    g = Grid.square(-1, 1, 25)
    c = ProjectedContext(E2, g.sample(lambda x, y: 0.2 * x), 0.3)
    z = g.sample(lambda x, y: np.sin(2 * x + a) * y)
    f = g.sample(lambda x, y: x - y + a)
    s = caccioppoli_sides(c, z, f, p, PHI)
    flipped = caccioppoli_sides(c, z.with_values(-z.values), f, p, PHI)
    assert flipped[0] == s[0]
    negf = caccioppoli_sides(c, z, f.with_values(-f.values), p, PHI)
    assert negf[2] == -s[2]


def test_caccioppoli_burgers_ratio_recorded():
    g = Grid.square(-1, 1, 33)
    run = viscosity_continuation(H, g, burgers_solution, [1e-1, 1e-2])
    for eps, res in zip(run.schedule, run.results):
        c = ProjectedContext(H, res.u, eps)
        z, f = first_derivative_rhs(c)
        lhs, rhs1, rhs2 = caccioppoli_sides(c, z, f, 3, PHI)
        assert np.isfinite([lhs, rhs1, rhs2]).all() and lhs >= 0 and rhs1 >= 0


def test_uniformity_constant_data():
    g = Grid.square(-1, 1, 17)
    run = viscosity_continuation(E2, g, lambda a, b: 0.4 + 0 * a, [1e-1, 1e-2])
    sw = uniformity_sweep(run, 2, 4, (-0.5, 0.5, -0.5, 0.5))
    assert sw.rows[0].norm_u == sw.rows[1].norm_u
    assert sw.uniform and len(sw.rows) == 2


def test_uniformity_burgers():
    g = Grid.square(-1, 1, 33)
    sched = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
    run = viscosity_continuation(H, g, burgers_solution, sched, lipschitz_cap=3.0)
    sw = uniformity_sweep(run, 2, 4, (-0.5, 0.5, -0.5, 0.5))
    assert sw.uniform and sw.ratio_u < 3 and sw.ratio_Yu < 3
    assert all(r.lip_X1u + r.lip_Yu <= 3.0 for r in sw.rows)
    assert [r.eps for r in sw.rows] == sched
