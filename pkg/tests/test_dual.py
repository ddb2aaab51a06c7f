import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carleson_sparse import (DyadicCube, HalfspaceField, InputError, cell_indicator, construct_dual_function,
                             dyadic_nontangential, lp_norm, make_grid, power_weight, unit_weight)
from carleson_sparse.dual import maximal_bound_side, strict_ancestor_max
from carleson_sparse.functionals import carleson


def test_single_cell_example():
    # f = 2 on one Whitney cell of level 1: N^D f = 2 on that cube, ||N^D f||_2^2 = 4 * 1/2
    g = make_grid(1, (0, 1), 3)
    f = cell_indicator(g, DyadicCube(1, (0,)), 2.0)
    b = construct_dual_function(f, unit_weight(g, 2.0), 2.0)
    assert b.norm_N ** 2 == pytest.approx(2.0)
    assert b.level_set_sum == pytest.approx(2.0)
    # g_Q = nu(Q) a^(q-1)/(q-1) = 1/2 * 2, constant 1 / (1/4 * 1/2) on the cell
    assert b.gQ[g.index(DyadicCube(1, (0,)))] == pytest.approx(1.0)
    assert b.pairing == pytest.approx(2.0)


def test_strict_ancestor_max():
    g = make_grid(1, (0, 1), 2)
    a = np.arange(g.num_cubes, dtype=float)[::-1]
    b = strict_ancestor_max(g, a)
    assert b[0] == 0 and b[1] == a[0] and b[3] == max(a[0], a[1])


def test_validation_and_zero_field():
    g = make_grid(1, (0, 1), 2)
    with pytest.raises(InputError):
        construct_dual_function(HalfspaceField(g, np.ones(7)), unit_weight(g), 1.0)
    z = construct_dual_function(HalfspaceField(g, np.zeros(7)), unit_weight(g), 2.0)
    assert z.vanishing and z.ratio == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([1.5, 2.0, 3.0]), st.floats(-0.9, 0.9), st.sampled_from([1, 2]))
def test_dual_function_identities(seed, q, s, n):
    J = 5 if n == 1 else 3
    g = make_grid(n, ((0, 1),) * n if n > 1 else (0, 1), J)
    rng = np.random.default_rng(seed)
    f = HalfspaceField(g, rng.normal(size=g.num_cubes) * (rng.random(g.num_cubes) < 0.5))
    p = q / (q - 1)
    w = power_weight(g, s * n * min(p - 1, 1), [0.375] * n, p)
    nu = w.dual()
    b = construct_dual_function(f, nu, q)
    # level-set layer cake: sum nu(Q) (a^q - b^q)_+ is exactly ||N^D f||^q
    assert b.level_set_sum == pytest.approx(b.norm_N ** q, rel=1e-10)
    # pairing against the dual function controls the norm with the factor q
    assert b.norm_N ** q <= q * b.pairing * (1 + 1e-12)
    # and a (a^(q-1) - b^(q-1)) <= a^q - b^q bounds it from above
    assert b.pairing <= b.norm_N ** q / (q - 1) * (1 + 1e-12)
    # the Carleson functional of g sits under the maximal function of (N^D f)^(q-1)
    cg = carleson(b.g, "dyadic_weighted", b.nu).values
    assert np.all(cg <= maximal_bound_side(b) * (1 + 1e-10) + 1e-300)
    if not b.vanishing:
        assert b.ratio >= 1 / (p * q) * (1 - 1e-12)


def test_norms_use_the_dual_exponent():
    g = make_grid(1, (0, 1), 4)
    f = cell_indicator(g, DyadicCube(2, (1,)), 3.0)
    nu = power_weight(g, 0.4, [0.3], 3.0)
    b = construct_dual_function(f, nu, 1.5)
    assert b.nu.p == 1.5
    assert b.norm_N == pytest.approx(lp_norm(dyadic_nontangential(f).field, 1.5, b.nu))
