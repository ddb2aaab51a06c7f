from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carleson_sparse import (DomainError, DyadicCube, HalfspaceField, InputError, build_sparse_family,
                             cell_indicator, check_sparse_domination, check_witness, make_grid)
from carleson_sparse.corpus import halfspace_corpus
from carleson_sparse.errors import CalibrationError
from carleson_sparse.kernels import poisson_kernel, riesz_kernel
from carleson_sparse.operators import operator
from carleson_sparse.sparse import (_node_exceptional, exceptional_set, select_stopping_cubes, sparse_sum,
                                    support_cube, top_cover)

G = make_grid(1, (0, 1), 6)


def test_support_cube_and_top_cover():
    g = make_grid(1, (0, 1), 4)
    f = cell_indicator(g, DyadicCube(3, (2,)))
    assert g.cube(support_cube(f)) == DyadicCube(3, (2,))
    v = f.values.copy()
    v[g.index(DyadicCube(4, (6,)))] = 1.0
    assert g.cube(support_cube(HalfspaceField(g, v))) == DyadicCube(2, (1,))
    assert support_cube(HalfspaceField(g, np.zeros(g.num_cubes))) == -1
    cover = [g.cube(q) for q in top_cover(g, g.index(DyadicCube(2, (1,))))]
    assert sorted(cover, key=lambda c: (c.level, c.corner)) == [DyadicCube(1, (1,)), DyadicCube(2, (0,)),
                                                               DyadicCube(2, (1,))]


def _stopping_bruteforce(g, mask, q):
    den = 2 ** g.n + 1
    qual = []
    for r in range(g.num_cubes):
        if r == q or q not in _ancestors(g, r):
            continue
        lv = g.leaves_of(r)
        if mask[lv].sum() * den > len(lv):
            qual.append(r)
    return sorted(r for r in qual if not any(a in qual for a in _ancestors(g, r)))


def _ancestors(g, r):
    out = []
    while g.parent[r] >= 0:
        r = int(g.parent[r])
        out.append(r)
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.05, 0.5))
def test_stopping_cubes_match_bruteforce(seed, density):
    g = make_grid(1, (0, 1), 5)
    mask = np.random.default_rng(seed).random(g.num_leaves) < density
    q = 0
    if mask.sum() * 3 > g.num_leaves:
        with pytest.raises(CalibrationError):
            select_stopping_cubes(g, mask, q)
        return
    st_ = select_stopping_cubes(g, mask, q)
    assert list(st_.cubes) == _stopping_bruteforce(g, mask, q)
    assert st_.covered == sum(int(g.leaf_counts[r]) for r in st_.cubes)
    # maximality gives the parent bound automatically
    assert st_.parent_bound


def test_two_routes_to_the_exceptional_set():
    k = riesz_kernel(1, 1)
    f = halfspace_corpus(G, ["coarse-cell", "carleson-box"], 2, seed=3)
    op = operator(k, G)
    sizes = []
    for inst in f:
        q1 = support_cube(inst.field)
        U = op.local_S(inst.field)
        mass = op.local_mass(inst.field)
        for c in (0.25, 1.0, 4.0):
            a = np.nonzero(_node_exceptional(op, U, mass, q1, c))[0]
            b = exceptional_set(k, inst.field, q1, c)
            assert np.array_equal(a, b)
            sizes.append(len(a))
    assert max(sizes) > 0


def test_exceptional_set_needs_local_support():
    g = make_grid(1, (0, 1), 4)
    f = cell_indicator(g, DyadicCube(1, (0,)))
    with pytest.raises(DomainError):
        exceptional_set(poisson_kernel(1), f, g.index(DyadicCube(4, (15,))), 1.0)


@pytest.mark.parametrize("k", [poisson_kernel(1), riesz_kernel(1, 1)], ids=lambda k: k.name)
def test_built_family_is_sparse_and_dominates(k):
    for inst in halfspace_corpus(G, ["coarse-cell", "fine-cell", "dipole-vertical", "counterexample"], 3, seed=1):
        b = build_sparse_family(k, inst.field)
        assert b.verify(G).sparse
        assert check_witness(b.family, b.eta, G)
        assert b.uncovered_leaves == 0
        d = check_sparse_domination(k, inst.field, b)
        assert d.violations == 0 and np.isfinite(d.constant)
        # every log entry kept at least eta of its cube
        assert all(1 - lg.covered >= b.eta for lg in b.log)


def test_sparse_sum_counts_each_member():
    k = poisson_kernel(1)
    f = cell_indicator(G, DyadicCube(3, (3,)))
    avg = operator(k, G).local_mass(f) / G.sides
    members = [G.index(DyadicCube(2, (1,))), G.index(DyadicCube(3, (3,)))]
    s = sparse_sum(f, members, k)
    leaf = G.leaves_of(members[1])[0]
    assert s[leaf] == pytest.approx(avg[members[0]] + avg[members[1]])
    assert s[G.leaves_of(G.index(DyadicCube(3, (2,))))[0]] == pytest.approx(avg[members[0]])


def test_build_is_deterministic_and_validates_eta():
    k = poisson_kernel(1)
    f = halfspace_corpus(G, ["carleson-box"], 0)[0].field
    a, b = build_sparse_family(k, f), build_sparse_family(k, f)
    assert a.family.members == b.family.members and a.c == b.c
    with pytest.raises(InputError):
        build_sparse_family(k, f, eta=Fraction(1))
    z = build_sparse_family(k, HalfspaceField(G, np.zeros(G.num_cubes)))
    assert z.family.members == [0] and z.verify(G).sparse
