import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carleson_sparse import (BoundaryField, CarlesonBox, ConeConfig, DyadicCube, HalfspaceField,
                             InputError, area, box_indicator, carleson, cell_indicator,
                             dyadic_nontangential, integrate, lp_norm, make_grid, maximal,
                             nontangential, power_weight)
from carleson_sparse.fields import whitney_boxes


def _rand_boundary(g, seed):
    return BoundaryField(g, np.random.default_rng(seed).normal(size=g.num_leaves))


def test_centered_maximal_against_loops():
    g = make_grid(1, (0, 1), 4)
    f = _rand_boundary(g, 0)
    a = np.abs(f.values)
    ref = np.zeros(16)
    for i in range(16):
        for k in range(17):
            lo, hi = max(0, i - k), min(16, i + k + 1)
            ref[i] = max(ref[i], a[lo:hi].sum() / (2 * k + 1))
    assert np.allclose(maximal(f).values, ref)


def test_centered_maximal_two_dimensional_against_loops():
    g = make_grid(2, ((0, 1), (0, 1)), 2)
    f = _rand_boundary(g, 1)
    a = np.abs(f.values).reshape(4, 4)
    got = maximal(f).values.reshape(4, 4)
    for i in range(4):
        for j in range(4):
            best = 0.0
            for k in range(5):
                s = a[max(0, i - k):i + k + 1, max(0, j - k):j + k + 1].sum() / (2 * k + 1) ** 2
                best = max(best, s)
            assert got[i, j] == pytest.approx(best)


def test_dyadic_weighted_maximal_against_loops():
    g = make_grid(1, (0, 1), 3)
    f = _rand_boundary(g, 2)
    w = power_weight(g, 0.5, [0.3])
    a, wv = np.abs(f.values), w.values
    ref = np.zeros(8)
    for i in range(8):
        for j in range(4):
            s = 1 << (3 - j)
            b = (i // s) * s
            ref[i] = max(ref[i], np.dot(a[b:b + s], wv[b:b + s]) / wv[b:b + s].sum())
    assert np.allclose(maximal(f, "dyadic_weighted", w).values, ref)
    with pytest.raises(InputError):
        maximal(f, "dyadic_weighted")
    with pytest.raises(InputError):
        maximal(f, "sideways")


def test_centered3_weighted_maximal_example():
    g = make_grid(1, (0, 1), 2)
    f = BoundaryField(g, np.array([4.0, 0, 0, 0]))
    v = maximal(f, "centered3_weighted", power_weight(g, 0.0, [0.0])).values
    # leaf 0: 3Q of [0,1/4) meets two leaves, average 2; leaf 1: 3Q of [1/4,1/2) gives 4/3
    assert v.tolist() == pytest.approx([2.0, 4 / 3, 1.0, 1.0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([1.5, 2.0, 3.0]), st.floats(-0.9, 0.9))
def test_doob_bound(seed, p, s):
    g = make_grid(1, (0, 1), 6)
    f = _rand_boundary(g, seed)
    w = power_weight(g, s * min(p - 1, 1), [0.375], p)
    Mf = maximal(f, "dyadic_weighted", w).field
    assert lp_norm(Mf, p, w) <= w.q * lp_norm(f, p, w)


def test_dyadic_carleson_of_box_indicator():
    J = 5
    g = make_grid(1, (0, 1), J)
    j = 2
    Q = DyadicCube(j, (1,))
    v = carleson(box_indicator(g, Q), "dyadic").values
    inside = g.leaves_of(g.index(Q))
    expect = 2.0 ** (-j) * (1 - 2.0 ** (-(J - j + 1)))
    assert np.allclose(v[inside], expect)
    # full C includes the dyadic family
    assert np.all(carleson(box_indicator(g, Q)).values >= v - 1e-15)


def test_full_carleson_against_region_integrals():
    g = make_grid(1, (0, 1), 4)
    rng = np.random.default_rng(3)
    f = HalfspaceField(g, rng.normal(size=g.num_cubes))
    c = carleson(f, "full", shifts=(0.0,)).values
    ref = np.zeros(g.num_leaves)
    for q in range(g.num_cubes):
        cube = g.cube(q)
        val = integrate(abs(f), CarlesonBox(cube)) / cube.side
        for leaf in g.leaves_of(q):
            ref[leaf] = max(ref[leaf], val)
    assert np.allclose(c, ref)


def test_c3d_is_dominated_by_affine_bound_for_unit_weight():
    g = make_grid(1, (0, 1), 5)
    rng = np.random.default_rng(4)
    f = HalfspaceField(g, rng.normal(size=g.num_cubes))
    c3 = carleson(f, "c3d", power_weight(g, 0.0, [0.0]), c=3.0).values
    cd = carleson(f, "dyadic").values
    assert np.all(c3 >= 0) and np.max(c3) <= 3 * np.max(carleson(f).values) + 1e-12
    assert np.max(cd) <= np.max(carleson(f).values) + 1e-12
    with pytest.raises(InputError):
        carleson(f, "c3d", power_weight(g, 0.0, [0.0]), c=0.5)


def test_area_of_constant_at_center():
    J = 6
    g = make_grid(1, (0, 1), J)
    one = HalfspaceField(g, np.ones(g.num_cubes))
    z = 0.5
    # the cone |x - z| < t stays in [0,1) for t < 1/2, beyond that the width is 1
    t0 = 2.0 ** (-J - 1)
    ref = 2 * (0.5 - t0) + math.log(2)
    assert area(one, z=[z])[0] == pytest.approx(ref, rel=1e-12)
    half = area(one, ConeConfig(0.5), z=[z])[0]
    assert half == pytest.approx(1 - 2 * 0.5 * t0, rel=1e-12)


def test_area_and_nontangential_finite_height():
    g = make_grid(1, (0, 1), 4)
    f = cell_indicator(g, DyadicCube(0, (0,)), 2.0)
    assert area(f, ConeConfig(1.0, 0.5), z=[0.5])[0] == 0
    assert nontangential(f, ConeConfig(1.0, 0.5), z=[0.5])[0] == 0
    assert nontangential(f, z=[0.5])[0] == 2
    with pytest.raises(InputError):
        ConeConfig(0.0)
    with pytest.raises(InputError):
        ConeConfig(1.0, -1.0)


def _hits_bruteforce(g, z, al):
    """Cells meeting the open cone in positive area, via shapely polygon clipping."""
    shapely = pytest.importorskip("shapely.geometry")
    T = 4.0
    cone = shapely.Polygon([(z, 0), (z - al * T, T), (z + al * T, T)])
    t0, t1, x0, x1 = whitney_boxes(g)
    return np.array([cone.intersection(shapely.box(x0[q, 0], t0[q], x1[q, 0], t1[q])).area > 1e-15
                     for q in range(g.num_cubes)])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0, 1).filter(lambda z: abs(z * 128 - round(z * 128)) > 1e-6),
       st.sampled_from([0.5, 1.0, 2.0]))
def test_nontangential_against_polygon_clipping(seed, z, al):
    g = make_grid(1, (0, 1), 4)
    f = HalfspaceField(g, np.random.default_rng(seed).normal(size=g.num_cubes))
    hit = _hits_bruteforce(g, z, al)
    ref = np.abs(f.values)[hit].max(initial=0.0)
    assert nontangential(f, ConeConfig(al), z=[z])[0] == pytest.approx(ref)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_dyadic_nontangential_below_conical(seed):
    g = make_grid(2, ((0, 1), (0, 1)), 3)
    f = HalfspaceField(g, np.random.default_rng(seed).normal(size=g.num_cubes))
    assert np.all(dyadic_nontangential(f).values <= nontangential(f).values + 1e-15)
