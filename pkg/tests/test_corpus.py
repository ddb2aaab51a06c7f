import numpy as np
import pytest

from carleson_sparse import (BoundaryField, CarlesonBox, DyadicCube, InputError, area, integrate,
                             make_grid, norm_table_csv, power_weight)
from carleson_sparse.corpus import (NAMED_BOUNDARY, NAMED_FIELDS, boundary_corpus, builtin_kernels,
                                    default_pole, halfspace_corpus, named_field, support_cube_of)
from carleson_sparse.fields import whitney_measures
from carleson_sparse.sparse import support_cube


@pytest.mark.parametrize("n, J", [(1, 6), (2, 4)])
def test_named_fields_live_in_the_support_box(n, J):
    g = make_grid(n, ((0, 1),) * n if n > 1 else (0, 1), J)
    q1 = support_cube_of(g)
    assert q1 == DyadicCube(2, (1,) * n)
    assert np.allclose(default_pole(g), 0.375)
    for inst in halfspace_corpus(g, NAMED_FIELDS, 4, seed=2):
        assert np.any(inst.field.values != 0), inst.name
        q = g.cube(support_cube(inst.field))
        # the support cube is Q_1 or one of its descendants
        assert q.level >= q1.level and all(c >> (q.level - q1.level) == c1 for c, c1 in zip(q.corner, q1.corner))


def test_exact_box_fields():
    g = make_grid(1, (0, 1), 6)
    box = named_field(g, "carleson-box")
    # cell averages of the box indicator integrate to the box's represented measure
    assert integrate(box, CarlesonBox(DyadicCube(0, (0,)))) == pytest.approx(
        (1 / 4) * (1 / 4) * (1 - 2.0 ** -(6 - 2 + 1)))
    dip = named_field(g, "dipole-vertical")
    assert float(np.dot(dip.values, whitney_measures(g))) == 0.0
    with pytest.raises(InputError):
        named_field(g, "spiral")


def test_counterexample_values():
    g = make_grid(1, (0, 1), 5)
    f = named_field(g, "counterexample")
    q = g.index(DyadicCube(2, (1,)))
    # center of Q_1-w is (3/16, 3/8): value 1/(3/16)
    assert f.values[q] == pytest.approx(16 / 3)
    assert area(f).values.max() > 0


def test_random_corpus_is_seeded():
    g = make_grid(2, ((0, 1), (0, 1)), 4)
    a = halfspace_corpus(g, (), 3, seed=5)
    b = halfspace_corpus(g, (), 3, seed=5)
    c = halfspace_corpus(g, (), 3, seed=6)
    assert all(np.array_equal(x.field.values, y.field.values) for x, y in zip(a, b))
    assert not np.array_equal(a[0].field.values, c[0].field.values)


def test_boundary_corpus():
    g = make_grid(1, (0, 1), 6)
    w = power_weight(g, 0.5, default_pole(g), 2.0)
    corp = boundary_corpus(g, 3, seed=1, weight=w)
    assert [b.name for b in corp[:len(NAMED_BOUNDARY)]] == list(NAMED_BOUNDARY)
    assert all(np.any(b.field.values != 0) for b in corp)
    dual = corp[NAMED_BOUNDARY.index("dual-power")].field
    sup = corp[0].field
    assert np.allclose(dual.values, sup.values / w.values)


def test_builtin_kernels():
    assert [k.name for k in builtin_kernels(1)][:2] == ["poisson n=1", "riesz j=1 n=1"]
    assert len(builtin_kernels(1)) == 3 and len(builtin_kernels(2)) == 3


def test_norm_table_and_functional_csv():
    g = make_grid(1, (0, 1), 2)
    f = BoundaryField(g, np.array([1.0, -2.0, 0.0, 2.0]))
    text = norm_table_csv({"f": f}, [1, 2])
    assert text.splitlines() == ["name,p,norm", "f,1.0,1.25", "f,2.0,1.5"]
    g4 = make_grid(1, (0, 1), 4)
    res = area(halfspace_corpus(g4, ("coarse-cell",), 0)[0].field)
    lines = res.to_csv().splitlines()
    assert lines[0] == "z1,value" and len(lines) == 17 and lines[1].startswith("0.03125,")
    assert res.to_text().startswith("boundary 1 4")
