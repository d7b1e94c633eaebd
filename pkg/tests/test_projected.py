from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smg.frames import builtin
from smg.grid import Grid, integrate, interior
from smg.projected import (ProjectedContext, adjoint_m, apply_X1u, apply_X2u, apply_Yu, commutator_omega,
                           lipschitz_budget, structure_bound)

H = builtin("heisenberg")
E2 = builtin("roto_translation")

# smooth (u, z) pairs used for the order checks
PAIRS = [
    (lambda a, b: 0.3 * np.sin(a) * np.cos(b) + 0.2 * a * b, lambda a, b: np.exp(0.5 * a) * np.sin(b)),
    (lambda a, b: 0.1 * a**2 - 0.2 * b + 0.15 * np.cos(a + b), lambda a, b: np.cos(2 * a) + a * b**2),
]


def _bump(cx, cy, r2=0.64):
    def f(a, b):
        q = r2 - (a - cx) ** 2 - (b - cy) ** 2
        return np.where(q > 0, np.exp(-1.0 / np.maximum(q, 1e-300) + 1.0 / r2), 0.0)
    return f


def ctx_of(frame, grid, u, eps=0.3):
    return ProjectedContext(frame, grid.sample(u), eps)


def test_eps_must_be_positive():
    g = Grid.square(0, 1, 5)
    with pytest.raises(ValueError, match="eps must be positive"):
        ProjectedContext(H, g.sample(lambda a, b: 0 * a), 0.0)


def test_field_examples():
    g = Grid.square(-1, 1, 9)
    c = ctx_of(H, g, lambda a, b: 2 + 0 * a)
    assert np.allclose(apply_X1u(c, g.sample(lambda a, b: 5 + 0 * a)).values, 0)
    assert np.allclose(apply_X1u(c, g.sample(lambda a, b: b)).values, 2)
    assert np.allclose(apply_Yu(c, g.sample(lambda a, b: b)).values, 1)
    c01 = ProjectedContext(H, c.u, 0.1)
    assert np.allclose(apply_X2u(c01, g.sample(lambda a, b: b)).values, 0.1)
    ce = ctx_of(E2, g, lambda a, b: 0 * a)
    assert np.allclose(apply_X1u(ce, g.sample(lambda a, b: a)).values, 1)
    ce2 = ctx_of(E2, g, lambda a, b: math.pi / 2 + 0 * a)
    assert np.allclose(apply_Yu(ce2, g.sample(lambda a, b: a)).values, -1)


def test_grid_mismatch():
    c = ctx_of(H, Grid.square(0, 1, 5), lambda a, b: a)
    with pytest.raises(ValueError):
        apply_X1u(c, Grid.square(0, 1, 6).sample(lambda a, b: a))


def test_adjoint_m_examples():
    g = Grid.square(-1, 1, 9)
    m1, m2 = adjoint_m(ctx_of(H, g, lambda a, b: b))
    assert np.allclose(m1.values, 1) and np.allclose(m2.values, 0)
    m1, m2 = adjoint_m(ctx_of(H, g, lambda a, b: 3 + 0 * a))
    assert np.allclose(m1.values, 0) and np.allclose(m2.values, 0)
    m1, m2 = adjoint_m(ctx_of(E2, g, lambda a, b: 0 * a))
    assert np.allclose(m1.values, 0) and np.allclose(m2.values, 0)


def test_omega_examples():
    g = Grid.square(-1, 1, 17)
    uf = PAIRS[0][0]
    c = ctx_of(H, g, uf)
    w1, w2 = commutator_omega(c)
    assert np.all(w1.values == 0)
    assert np.allclose(w2.values, -c.y(c.u.values))
    c = ctx_of(E2, g, uf, eps=0.2)
    w1, w2 = commutator_omega(c)
    assert np.allclose(w1.values, -0.2 * c.x1(c.u.values))
    assert np.allclose(w2.values, -c.y(c.u.values))
    w1, w2 = commutator_omega(ctx_of(H, g, lambda a, b: 1 + 0 * a))
    assert np.all(w2.values == 0)


def test_lipschitz_budget_examples():
    g = Grid.square(-1, 1, 9)
    assert lipschitz_budget(ctx_of(H, g, lambda a, b: 0 * a)) == (0.0, 0.0)
    lx, ly = lipschitz_budget(ctx_of(H, g, lambda a, b: 3 * a))
    assert lx == pytest.approx(3) and ly == pytest.approx(0, abs=1e-13)
    lx, ly = lipschitz_budget(ctx_of(H, g, lambda a, b: b))
    assert lx == pytest.approx(1) and ly == pytest.approx(1)


@pytest.mark.parametrize("frame", [H, E2], ids=["heisenberg", "roto_translation"])
def test_structure_bound_eps_independent(frame):
    g = Grid.square(-1, 1, 17)
    vals = [structure_bound(ctx_of(frame, g, PAIRS[1][0], eps)) for eps in (1.0, 0.1, 1e-3)]
    assert np.isfinite(vals).all()
    assert np.allclose(vals, vals[0], rtol=1e-12)


def commutator_defect(frame, uf, zf, n):
    g = Grid.square(-1, 1, n)
    c = ctx_of(frame, g, uf)
    z = g.sample(zf).values
    w1, w2 = commutator_omega(c)
    d = c.x1(c.x2(z)) - c.x2(c.x1(z)) - w1.values * c.x1(z) - w2.values * c.x2(z)
    # fields applied twice: first-order one-sided errors reach one row in
    return float(np.max(np.abs(interior(d, 2))))


def ibp_defect(frame, i, n):
    g = Grid.square(-1, 1, n)
    c = ctx_of(frame, g, PAIRS[0][0])
    z = g.sample(lambda a, b: _bump(0.05, -0.05)(a, b) * (1 + a)).values
    w = g.sample(lambda a, b: _bump(-0.05, 0.0)(a, b) * np.cos(b)).values
    m = adjoint_m(c)[i - 1].values
    return abs(integrate(c.apply(i, z) * w, g) + integrate(z * c.apply(i, w), g) + integrate(m * z * w, g))


def orders(vals):
    v = np.asarray(vals)
    return v[:-1] / v[1:]


NS = (33, 65, 129, 257)


@pytest.mark.parametrize("frame", [H, E2], ids=["heisenberg", "roto_translation"])
@pytest.mark.parametrize("pair", [0, 1])
def test_commutator_identity_second_order(frame, pair):
    errs = [commutator_defect(frame, *PAIRS[pair], n) for n in NS]
    assert np.all(orders(errs) >= 3.5), errs


@pytest.mark.parametrize("frame", [H, E2], ids=["heisenberg", "roto_translation"])
@pytest.mark.parametrize("i", [1, 2])
def test_integration_by_parts(frame, i):
    errs = [ibp_defect(frame, i, n) for n in (17, 33, 65, 129)]
    if max(errs) < 1e-13:
        return  # constant-coefficient case: the discrete identity holds exactly
    assert np.all(orders(errs) >= 3.5), errs


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 3))
def test_x2u_is_eps_times_yu(a, b, eps):
    g = Grid.square(-1, 1, 9)
    c = ProjectedContext(E2, g.sample(lambda x, y: a * x + b * y), eps)
    z = g.sample(lambda x, y: np.sin(x) * y)
    assert np.allclose(apply_X2u(c, z).values, eps * apply_Yu(c, z).values, rtol=1e-14, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_fields_are_linear_and_kill_constants(a, b, k):
    g = Grid.square(-1, 1, 9)
    c = ctx_of(H, g, PAIRS[0][0])
    z1 = g.sample(lambda x, y: np.cos(x + y)).values
    z2 = g.sample(lambda x, y: x * y**2).values
    lhs = c.x1(a * z1 + b * z2 + k)
    assert np.allclose(lhs, a * c.x1(z1) + b * c.x1(z2), atol=1e-11)
