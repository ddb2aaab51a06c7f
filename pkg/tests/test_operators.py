import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as spi

from carleson_sparse import (BoundaryField, DomainError, DyadicCube, HalfspaceField, InputError,
                             apply_S, apply_Sstar, grand_maximal_truncation,
                             integrate, make_grid, pairing_boundary, pairing_halfspace, theta)
from carleson_sparse.corpus import default_graph
from carleson_sparse.fields import DilatedCarlesonBox, whitney_measures
from carleson_sparse.kernels import cauchy_kernel, poisson_kernel, riesz_kernel
from carleson_sparse.operators import grand_maximal_bruteforce, neighbors, operator

G5 = make_grid(1, (0, 1), 5)
KERNELS = [poisson_kernel(1), riesz_kernel(1, 1), cauchy_kernel(default_graph())]


def _poisson_entry(ylo, yhi, t0, t1, x0, x1):
    """∬ (arctan((yhi-x)/t) - arctan((ylo-x)/t)) / pi dt dx by nested adaptive quadrature."""
    def inner(t):
        F = lambda x: (math.atan((yhi - x) / t) - math.atan((ylo - x) / t)) / math.pi
        pts = [p for p in (ylo, yhi) if x0 < p < x1] or None
        return spi.quad(F, x0, x1, points=pts, epsabs=1e-14, epsrel=1e-12)[0]
    return spi.quad(inner, t0, t1, epsabs=1e-14, epsrel=1e-12)[0]


@pytest.mark.parametrize("route", ["product", "closed"])
def test_poisson_table_entries_against_quad(route):
    op = operator(poisson_kernel(1), G5)
    T = op.table("W", route)
    g = G5
    for leaf, cube in [(0, 0), (3, 1), (5, 20), (5, 36), (31, 40)]:
        s = g.sides[cube]
        lo = g.lows[cube, 0]
        ylo = g.leaf_lows[leaf, 0]
        ref = _poisson_entry(ylo, ylo + g.leaf_side, s / 2, s, lo, lo + s)
        assert T[leaf, cube] == pytest.approx(ref, rel=1e-7, abs=1e-13)


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: k.name)
def test_routes_agree(k):
    op = operator(k, G5)
    for kind in ("W", "A", "B"):
        a, b = op.table(kind, "product"), op.table(kind, "closed")
        assert np.abs(a - b).max() <= 1e-7 * np.abs(b).max()
    assert op.capped == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(range(len(KERNELS))))
def test_adjoint_pairing(seed, ki):
    k = KERNELS[ki]
    rng = np.random.default_rng(seed)
    f = HalfspaceField(G5, rng.normal(size=G5.num_cubes))
    h = BoundaryField(G5, rng.normal(size=G5.num_leaves))
    lhs = pairing_boundary(apply_S(k, f), h)
    rhs = pairing_halfspace(f, apply_Sstar(k, h))
    scale = math.sqrt(pairing_boundary(apply_S(k, f), apply_S(k, f)) * pairing_boundary(h, h))
    assert abs(lhs - rhs) <= 1e-6 * scale


def test_theta_matches_arctan_formula():
    k = poisson_kernel(1)
    one = BoundaryField(G5, np.ones(G5.num_leaves))
    t = np.array([0.1, 0.5])
    x = np.array([[0.3], [0.9]])
    ref = (np.arctan((1 - x[:, 0]) / t) + np.arctan(x[:, 0] / t)) / math.pi
    assert np.allclose(theta(k, one, t, x), ref, rtol=1e-13)
    c = apply_Sstar(k, one, "center")
    assert c.values[0] == pytest.approx((2 * math.atan(0.5 / 0.75)) / math.pi)
    with pytest.raises(InputError):
        apply_Sstar(k, one, "corner")


def test_Sstar_of_constant_is_cell_average_of_arctan_formula():
    k = poisson_kernel(1)
    one = BoundaryField(G5, np.ones(G5.num_leaves))
    v = apply_Sstar(k, one).values
    ref = spi.dblquad(lambda x, t: (math.atan((1 - x) / t) + math.atan(x / t)) / math.pi, 0.5, 1, 0, 1,
                      epsabs=1e-13)[0] / 0.5
    assert v[0] == pytest.approx(ref, rel=1e-8)


def test_local_mass_is_dilated_box_integral():
    rng = np.random.default_rng(0)
    f = HalfspaceField(G5, rng.normal(size=G5.num_cubes))
    lm = operator(poisson_kernel(1), G5).local_mass(f)
    for q in (0, 3, 10, 40):
        assert lm[q] == pytest.approx(integrate(abs(f), DilatedCarlesonBox(G5.cube(q), 3.0)), rel=1e-13)


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: k.name)
def test_grand_maximal_against_bruteforce(k):
    g = make_grid(1, (0, 1), 4)
    rng = np.random.default_rng(1)
    v = np.zeros(g.num_cubes)
    v[rng.choice(g.num_cubes, 8, replace=False)] = rng.normal(size=8)
    f = HalfspaceField(g, v)
    fast = grand_maximal_truncation(k, f).values
    slow = grand_maximal_bruteforce(k, f)
    assert np.allclose(fast, slow, rtol=1e-6, atol=1e-9 * np.abs(slow).max())


def test_grand_maximal_two_dimensional():
    g = make_grid(2, ((0, 1), (0, 1)), 2)
    rng = np.random.default_rng(2)
    f = HalfspaceField(g, rng.normal(size=g.num_cubes))
    k = riesz_kernel(2, 2)
    assert np.allclose(grand_maximal_truncation(k, f).values, grand_maximal_bruteforce(k, f), rtol=1e-6,
                       atol=1e-9)


def test_neighbors():
    nb = neighbors(make_grid(1, (0, 1), 2))
    g = make_grid(1, (0, 1), 2)
    # [1/4, 1/2) at level 2 has neighbors [0,1/4) and [1/2,3/4)
    q = g.index(DyadicCube(2, (1,)))
    assert sorted(x for x in nb[q] if x >= 0) == sorted(g.index(DyadicCube(2, (i,))) for i in (0, 1, 2))
    assert sorted(nb[0].tolist()) == [-1, -1, 0]


def test_operator_rejects_mismatch():
    with pytest.raises(DomainError):
        operator(poisson_kernel(2), G5)
    f = HalfspaceField(make_grid(1, (0, 1), 3), np.ones(15))
    with pytest.raises(DomainError):
        operator(poisson_kernel(1), G5).S(f)


def test_S_of_deep_cell_indicator_sums_to_root_share():
    # summing S 1_W over the root keeps the Poisson mass that falls inside [0, 1)
    k = poisson_kernel(1)
    g = G5
    q = g.index(DyadicCube(5, (16,)))
    v = np.zeros(g.num_cubes)
    v[q] = 1
    Sf = apply_S(k, HalfspaceField(g, v)).values
    tot = float(np.sum(Sf) * g.leaf_measure)
    ref = spi.dblquad(lambda x, t: (math.atan((1 - x) / t) + math.atan(x / t)) / math.pi,
                      1 / 64, 1 / 32, 0.5, 0.5 + 1 / 32, epsabs=1e-15)[0]
    assert tot == pytest.approx(ref, rel=1e-7)
