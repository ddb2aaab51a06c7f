import math

import pytest

from carleson_sparse import InputError, RunConfig, emit_report, parse_config, parse_csv, run_suite
from carleson_sparse import harness as hs


def test_parse_config():
    cfg = parse_config("""
        # small run
        n = 1
        J = 5
        kernel = poisson n=1
        kernel = riesz j=1 n=1
        fields = coarse-cell, dipole-vertical
        random_fields = 2
        p_values = 2, 3
        suites = weak-l1
        tol.weak_l1_S = 4   # tighter
    """)
    assert cfg.J == 5 and cfg.kernels == ("poisson n=1", "riesz j=1 n=1")
    assert cfg.fields == ("coarse-cell", "dipole-vertical") and cfg.p_values == (2.0, 3.0)
    assert cfg.tol("weak_l1_S") == 4.0 and cfg.tol("weak_l1_MS") == 16.0
    assert cfg.suite_list() == ("weak-l1",)
    assert parse_config(hs.config_text(cfg)) == cfg


@pytest.mark.parametrize("text", ["J = 1", "suites = everything", "tol.bogus = 1", "colour = red",
                                  "kernel = bessel", "p_values = 0.5", "J"])
def test_parse_config_rejects(text):
    with pytest.raises(InputError):
        parse_config(text)


def test_threshold_roundtrip():
    for t in (hs.Threshold("<=", 0.1), hs.Threshold(">", 0.0), hs.Threshold("<", math.inf)):
        assert hs.Threshold.parse(t.text()) == t
    assert not hs.Threshold("<=", 1.0).check(math.nan)
    assert hs.Threshold("<", math.inf).check(3.0) and not hs.Threshold("<", math.inf).check(math.inf)
    with pytest.raises(InputError):
        hs.Threshold.parse("~1")


def test_empty_and_single_row_csv(tmp_path):
    rep = hs.Report()
    text = emit_report(rep, "csv")
    assert text == ",".join(hs.CSV_COLUMNS) + "\n"
    rep.add("adjoint", "50-pairs", 1.5e-9, hs.Threshold("<=", 1e-6), kernel="poisson n=1")
    path = tmp_path / "one.csv"
    text = emit_report(rep, "csv", str(path))
    assert text.count("\n") == 2 and "\r" not in text
    assert path.read_bytes() == text.encode("utf-8")
    assert text.splitlines()[1] == "adjoint,50-pairs,poisson n=1,,,,1.5e-09,<=1e-06,pass"


def test_csv_roundtrip():
    rep = hs.Report()
    rep.add("reverse-duality", "per-weight-min", 0.55, hs.Threshold(">=", 2 / 9), weight="power a=0.3", p=1.5)
    rep.add("area-carleson", "dipole, \"quoted\"", 9.0, hs.Threshold("<=", 8.0), alpha=1.0)
    back = parse_csv(hs.emit_csv(rep))
    assert back.rows == rep.rows
    assert [r.passed for r in back.rows] == [True, False]
    with pytest.raises(InputError):
        parse_csv("a,b\n")


def test_text_report_lists_failures():
    rep = hs.Report(config="n = 1\n")
    rep.add("weak-l1", "x", 9.0, hs.Threshold("<=", 8.0))
    rep.warnings.append("sparseness: no instances (empty corpus)")
    text = emit_report(rep, "text")
    assert "weak-l1: FAIL (0/1 rows)" in text and "warning: sparseness" in text
    with pytest.raises(InputError):
        emit_report(rep, "xml")


SMALL = dict(J=5, fields=("coarse-cell", "dipole-vertical"), random_fields=2, boundary_random=2,
             weight_scales=(0.0, 0.5), sweep_scales=(0.0, 0.6), p_values=(2.0,), adjoint_pairs=4)


def test_run_is_deterministic():
    cfg = RunConfig(**SMALL)
    for suite in ("sparseness", "weak-l1", "reverse-duality"):
        a = hs.emit_csv(run_suite(cfg, suite))
        b = hs.emit_csv(run_suite(cfg, suite))
        assert a == b and a.count("\n") > 1


def test_empty_corpus_gives_warning():
    cfg = RunConfig(J=4, fields=(), random_fields=0)
    rep = run_suite(cfg, "sparse-domination")
    assert rep.rows == [] and any("empty corpus" in w for w in rep.warnings)
    with pytest.raises(InputError):
        run_suite(cfg, "nonsense")


def test_sweep_examples():
    cfg = RunConfig(**{**SMALL, "sweep_scales": (0.0, 0.3, 0.6, 0.8), "kernels": ("poisson n=1",)})
    table = hs.sweep_weights(cfg)
    chars = [r.char_nu for r in table.rows]
    assert chars[0] == pytest.approx(1.0)
    # |x - x0|^a with growing a has growing characteristic
    assert all(b >= a for a, b in zip(chars, chars[1:]))
    text = table.csv()
    assert text.splitlines()[0] == "kernel,a,p,q,char_nu,ratio"
    one = hs.sweep_weights(RunConfig(**{**SMALL, "sweep_scales": (0.0,), "kernels": ("poisson n=1",)}))
    assert len(one.rows) == 1 and one.rows[0].char_nu == pytest.approx(1.0)


def test_registry_covers_exactly_the_criteria():
    assert set(hs.REGISTRY) == set(hs.SUITES)
    assert sorted(hs.CRITERIA) == list(range(1, 12))
    assert set(hs.CRITERIA.values()) == set(hs.SUITES)
