import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as spi

from carleson_sparse.kernels import (DomainError, InputError, LipschitzGraph, cauchy_jump_kernel, cauchy_kernel,
                             check_regularity, load_tabulated_kernel, make_kernel, parse_kernel,
                             poisson_constant, poisson_kernel, riesz_kernel, regularity_samples)
from carleson_sparse.corpus import default_graph

FLAT = LipschitzGraph(np.array([0.0]), np.array([0.0]))


def _pt(*v):
    return np.array(v, float)


def test_poisson_constants():
    assert poisson_constant(1) == pytest.approx(1 / math.pi)
    assert poisson_constant(2) == pytest.approx(1 / (2 * math.pi))


def test_poisson_mass_is_one():
    k = poisson_kernel(1)
    tot = spi.quad(lambda y: float(k(0.3, _pt(0.2), _pt(y))), -np.inf, np.inf)[0]
    assert tot == pytest.approx(1, abs=1e-10)
    k2 = poisson_kernel(2)
    big = float(k2.y_integral(np.array(0.5), _pt(0, 0), _pt(-1e7, -1e7), _pt(1e7, 1e7)))
    assert big == pytest.approx(1, abs=1e-6)


def test_riesz_is_odd():
    k = riesz_kernel(1, 1)
    assert float(k(0.5, _pt(0.3), _pt(0.1))) == pytest.approx(-float(k(0.5, _pt(-0.3), _pt(-0.1))))
    assert float(k.y_integral(np.array(0.5), _pt(0.0), _pt(-2.0), _pt(2.0))) == pytest.approx(0, abs=1e-15)


KERNELS_1D = [poisson_kernel(1), riesz_kernel(1, 1), cauchy_kernel(default_graph(), "re"),
              cauchy_kernel(default_graph(), "im"), cauchy_jump_kernel(default_graph())]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(range(len(KERNELS_1D))), st.floats(0.02, 1), st.floats(-1, 2), st.floats(-1, 2),
       st.floats(0.01, 1))
def test_closed_y_integral_matches_quad(ki, t, x, lo, w):
    k = KERNELS_1D[ki]
    pts = [b for b in k.breakpoints if lo < b < lo + w] or None
    ref = spi.quad(lambda y: float(k(t, _pt(x), _pt(y))), lo, lo + w, points=pts, limit=400,
                   epsabs=1e-13, epsrel=1e-11)[0]
    got = float(k.y_integral(np.array(t), _pt(x), _pt(lo), _pt(lo + w)))
    assert got == pytest.approx(ref, abs=1e-9, rel=1e-8)


@pytest.mark.parametrize("k", [poisson_kernel(2), riesz_kernel(1, 2), riesz_kernel(2, 2)],
                         ids=lambda k: k.name)
def test_closed_y_integral_two_dimensional(k):
    t, x = 0.2, _pt(0.3, 0.6)
    lo, hi = _pt(0.1, 0.2), _pt(0.7, 0.5)
    ref = spi.dblquad(lambda v, u: float(k(t, x, _pt(u, v))), lo[0], hi[0], lo[1], hi[1],
                      epsabs=1e-12, epsrel=1e-11)[0]
    assert float(k.y_integral(np.array(t), x, lo, hi)) == pytest.approx(ref, rel=1e-8, abs=1e-11)


def test_flat_cauchy_parts():
    re, jump, P = cauchy_kernel(FLAT, "re"), cauchy_jump_kernel(FLAT), poisson_kernel(1)
    t = np.array([0.1, 0.5, 2.0])
    x = np.array([[0.0], [0.3], [-1.0]])
    y = np.array([[0.2], [0.3], [1.0]])
    assert np.allclose(re(t, x, y), 0.5 * P(t, x, y), rtol=1e-13)
    assert np.allclose(jump(t, x, y), P(t, x, y), rtol=1e-13)
    assert re.convolution and not cauchy_kernel(default_graph()).convolution


def test_graph_cauchy_jump_has_unit_mass():
    # the jump across the graph of the Cauchy integral of 1 is 1
    k = cauchy_jump_kernel(default_graph())
    v = float(k.y_integral(np.array(0.2), _pt(0.4), _pt(-1e6), _pt(1e6)))
    assert v == pytest.approx(1, abs=1e-5)


def test_graph_validation():
    with pytest.raises(InputError, match="vertical"):
        LipschitzGraph(np.array([0.0, 0.0]), np.array([0.0, 1.0]))
    g = LipschitzGraph(np.array([0.0, 1.0]), np.array([0.0, 0.5]))
    assert g.lipschitz == 0.5
    assert g.slope(np.array([-1.0, 0.5, 2.0])).tolist() == [0.0, 0.5, 0.0]


@pytest.mark.parametrize("k", [poisson_kernel(1), riesz_kernel(1, 1), cauchy_kernel(default_graph()),
                               poisson_kernel(2), riesz_kernel(2, 2)], ids=lambda k: k.name)
@pytest.mark.parametrize("direction", ["x", "y"])
def test_builtin_kernels_are_regular(k, direction):
    rep = check_regularity(k, direction, regularity_samples(k.n, direction, 300, seed=5))
    assert 0 < rep.sup_ratio < 50


def test_regularity_rejects_large_steps_and_detects_rough_kernel():
    k = poisson_kernel(1)
    with pytest.raises(DomainError):
        check_regularity(k, "y", [((0.1, _pt(0.0), _pt(0.0)), _pt(0.2))])
    # |x - y|^(-1/2) t^(-1/2) is not Hölder of order 1 at scale d
    rough = make_kernel("custom", 1, evaluate=lambda t, x, y: np.cos(1e4 * (x[..., 0] - y[..., 0])) / (
        t ** 2 + (x[..., 0] - y[..., 0]) ** 2) ** 0.5)
    assert check_regularity(rough, "y", regularity_samples(1, "y", 300, seed=1)).sup_ratio > 1e3


def test_parse_kernel():
    assert parse_kernel("poisson n=2").name == "poisson n=2"
    assert parse_kernel("riesz j=2 n=2").name == "riesz j=2 n=2"
    k = parse_kernel("cauchy-re lip=0,0;1,0.5;2,0")
    assert k.name == "cauchy-re lip=0.5"
    with pytest.raises(InputError):
        parse_kernel("cauchy-re n=2")
    with pytest.raises(InputError):
        parse_kernel("riesz j=3 n=2")
    with pytest.raises(InputError):
        parse_kernel("")


def test_tabulated_kernel_reproduces_trilinear_data(tmp_path):
    ts, xs, ys = [0.1, 1.0], [0.0, 1.0], [0.0, 0.5, 1.0]
    f = lambda t, x, y: 1 + 2 * t - x + 3 * y + t * x
    rows = [" ".join(str(f(t, x, y)) for y in ys) for t in ts for x in xs]
    text = "delta 0.5\n" + f"t {ts[0]} {ts[1]}\nx 0 1\ny 0 0.5 1\n" + "\n".join(rows)
    path = tmp_path / "k.txt"
    path.write_text(text)
    k = parse_kernel(f"custom table={path}")
    assert k.delta == 0.5 and k.y_integral is None
    assert float(k(0.4, _pt(0.3), _pt(0.8))) == pytest.approx(f(0.4, 0.3, 0.8))
    assert float(k(5.0, _pt(0.3), _pt(0.8))) == 0.0
    with pytest.raises(InputError):
        load_tabulated_kernel("t 1\nx 1\n1")
