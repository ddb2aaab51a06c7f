"""Batch driver: configuration, the acceptance suites, the weight sweep, and reports.

A suite returns a :class:`Report` of rows ``(suite, instance, kernel, weight, p,
alpha, value, threshold, pass)``.  Thresholds are written as a comparison and a
number (``"<=8"``, ``">=1.7"``, ``"<inf"``); every row carries its own verdict.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field, fields as dc_fields, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate as spi

from . import corpus as cp
from .czd import carleson_masses, cz_decompose
from .dual import construct_dual_function
from .dyadic import DyadicGrid, make_grid
from .errors import BudgetError, CalibrationError, InputError
from .fields import BoundaryField, HalfspaceField, l1_norm, lp_norm
from .functionals import ConeConfig, area, carleson, maximal, nontangential
from .kernels import Kernel, LipschitzGraph, cauchy_jump_kernel, parse_kernel
from .operators import apply_Sstar, operator, theta
from .sparse import build_sparse_family, check_sparse_domination
from .weights import Weight, ap_cube_family, ap_profile, ap_characteristic, power_weight

SUITES = ("sparseness", "sparse-domination", "weak-l1", "good-lambda", "area-carleson",
          "weighted-maximal", "weight-duality", "reverse-duality", "nontangential-weighted",
          "semigroup", "adjoint")

DEFAULT_TOLERANCES = {
    "eta": 0.5,
    "stability": 0.25,
    "weak_l1_S": 8.0,
    "weak_l1_MS": 16.0,
    "good_lambda": 32.0,
    "ac_bracket": 8.0,
    "counterexample_C": 0.8,
    "duality": 1e-12,
    "reverse_spread": 2.0,
    "nontangential": 20.0,
    "slope_margin": 0.3,
    "semigroup_factor": 1.7,
    "adjoint": 1e-6,
}

CSV_COLUMNS = ("suite", "instance", "kernel", "weight", "p", "alpha", "value", "threshold", "pass")


# -- configuration -----------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    n: int = 1
    J: int = 8
    padding: int = 4
    kernels: tuple = ()                 # kernel specs; empty means the built-in set
    fields: tuple = cp.NAMED_FIELDS
    random_fields: int = 16
    boundary_random: int = 8
    weight_scales: tuple = (-0.9, -0.5, 0.0, 0.5, 0.9)
    sweep_scales: tuple = (0.0, 0.3, 0.6, 0.8)
    p_values: tuple = (1.5, 2.0, 3.0)
    apertures: tuple = (1.0,)
    pole: tuple | None = None
    semigroup_levels: tuple = (5, 6, 7, 8, 9)
    adjoint_pairs: int = 50
    suites: tuple = ("all",)
    out_dir: str = "csl-out"
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        if self.n not in (1, 2):
            raise InputError("n must be 1 or 2")
        if self.J < 2:
            raise InputError("J must be at least 2")
        cp.support_level(self.padding)
        for s in self.suite_list():
            if s not in SUITES:
                raise InputError(f"unknown suite {s!r}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise InputError(f"unknown tolerance keys {sorted(unknown)}")
        for spec in self.kernels:
            parse_kernel(spec)
        for v in self.p_values:
            if not v > 1:
                raise InputError("p values must exceed 1")

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def suite_list(self) -> tuple:
        return SUITES if "all" in self.suites else tuple(self.suites)


_TUPLE_FLOAT = ("weight_scales", "sweep_scales", "p_values", "apertures", "pole")
_TUPLE_INT = ("semigroup_levels",)
_INT = ("n", "J", "padding", "random_fields", "boundary_random", "adjoint_pairs", "seed")


def parse_config(text: str) -> RunConfig:
    """Flat ``key = value`` text; ``kernel`` may repeat, lists are comma separated,
    ``tol.<name>`` overrides a tolerance, ``#`` starts a comment."""
    kw: dict = {}
    kernels, tols = [], dict(DEFAULT_TOLERANCES)
    names = {f.name for f in dc_fields(RunConfig)}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "kernel":
            kernels.append(val)
        elif key.startswith("tol."):
            tols[key[4:]] = float(val)
        elif key in _INT:
            kw[key] = int(val)
        elif key in _TUPLE_FLOAT:
            kw[key] = tuple(float(v) for v in val.split(",") if v.strip()) or None
        elif key in _TUPLE_INT:
            kw[key] = tuple(int(v) for v in val.split(",") if v.strip())
        elif key in ("fields", "suites"):
            kw[key] = tuple(v.strip() for v in val.split(",") if v.strip())
        elif key == "out_dir":
            kw[key] = val
        elif key in names:
            raise InputError(f"line {lineno}: {key} cannot be set from a config file")
        else:
            raise InputError(f"line {lineno}: unknown key {key!r}")
    if kernels:
        kw["kernels"] = tuple(kernels)
    kw["tolerances"] = tols
    return RunConfig(**kw)


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_text(cfg: RunConfig) -> str:
    """Echo of a config in the same flat format (parses back to an equal config)."""
    out = []
    for f in dc_fields(RunConfig):
        v = getattr(cfg, f.name)
        if f.name == "kernels":
            out.extend(f"kernel = {k}" for k in v)
        elif f.name == "tolerances":
            out.extend(f"tol.{k} = {v[k]!r}" for k in sorted(v))
        elif v is None:
            continue
        elif isinstance(v, tuple):
            out.append(f"{f.name} = " + ",".join(repr(x) if isinstance(x, float) else str(x) for x in v))
        else:
            out.append(f"{f.name} = {v}")
    return "\n".join(out) + "\n"


# -- reports ------------------------------------------------------------------------------

@dataclass(frozen=True)
class Threshold:
    op: str
    bound: float

    def check(self, v: float) -> bool:
        if not math.isfinite(v) and self.op != "<" :
            return False
        return {"<=": v <= self.bound, ">=": v >= self.bound, "<": v < self.bound,
                ">": v > self.bound}[self.op]

    def text(self) -> str:
        return f"{self.op}{float(self.bound)!r}"

    @classmethod
    def parse(cls, s: str) -> "Threshold":
        for op in ("<=", ">=", "<", ">"):
            if s.startswith(op):
                return cls(op, float(s[len(op):]))
        raise InputError(f"bad threshold {s!r}")


@dataclass(frozen=True)
class Row:
    suite: str
    instance: str
    kernel: str
    weight: str
    p: float | None
    alpha: float | None
    value: float
    threshold: Threshold
    passed: bool


@dataclass
class Report:
    rows: list = field(default_factory=list)
    config: str = ""
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def suites(self) -> list:
        seen = []
        for r in self.rows:
            if r.suite not in seen:
                seen.append(r.suite)
        return seen

    def add(self, suite, instance, value, threshold: Threshold, kernel="", weight="", p=None,
            alpha=None, extra_ok: bool = True):
        value = float(value)
        self.rows.append(Row(suite, instance, kernel, weight, None if p is None else float(p),
                             None if alpha is None else float(alpha), value, threshold,
                             bool(threshold.check(value) and extra_ok)))

    def extend(self, other: "Report"):
        self.rows.extend(other.rows)
        self.warnings.extend(other.warnings)


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def emit_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([r.suite, r.instance, r.kernel, r.weight, _num(r.p), _num(r.alpha),
                    _num(r.value), r.threshold.text(), "pass" if r.passed else "fail"])
    return buf.getvalue()


def parse_csv(text: str) -> Report:
    rd = csv.reader(io.StringIO(text))
    header = next(rd, None)
    if tuple(header or ()) != CSV_COLUMNS:
        raise InputError("not a report CSV")
    rows = []
    for rec in rd:
        s, inst, k, wt, p, al, v, th, ok = rec
        rows.append(Row(s, inst, k, wt, float(p) if p else None, float(al) if al else None,
                        float(v), Threshold.parse(th), ok == "pass"))
    return Report(rows)


def emit_text(report: Report) -> str:
    lines = ["# config", report.config.rstrip("\n"), "# results"]
    for s in report.suites():
        rows = [r for r in report.rows if r.suite == s]
        bad = [r for r in rows if not r.passed]
        lines.append(f"{s}: {'PASS' if not bad else 'FAIL'} ({len(rows) - len(bad)}/{len(rows)} rows)")
        for r in bad:
            lines.append(f"  fail {r.instance} {r.kernel} {r.weight} value={r.value:.6g} need {r.threshold.text()}")
    lines.extend(f"warning: {w}" for w in report.warnings)
    return "\n".join(lines) + "\n"


def emit_report(report: Report, fmt: str = "csv", path: str | None = None) -> str:
    if fmt not in ("csv", "text"):
        raise InputError("format must be csv or text")
    text = emit_csv(report) if fmt == "csv" else emit_text(report)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


# -- shared objects --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _grid(n: int, J: int) -> DyadicGrid:
    root = (0, 1) if n == 1 else ((0, 1), (0, 1))
    return make_grid(n, root, J)


@lru_cache(maxsize=None)
def _kernel(spec: str) -> Kernel:
    return parse_kernel(spec)


@lru_cache(maxsize=None)
def _builtin(n: int) -> tuple:
    return tuple(cp.builtin_kernels(n))


def kernels_for(cfg: RunConfig) -> list[Kernel]:
    if cfg.kernels:
        ks = [_kernel(s) for s in cfg.kernels]
        bad = [k.name for k in ks if k.n != cfg.n]
        if bad:
            raise InputError(f"kernels {bad} do not match n = {cfg.n}")
        return ks
    return list(_builtin(cfg.n))


def grid_for(cfg: RunConfig, J: int | None = None) -> DyadicGrid:
    return _grid(cfg.n, cfg.J if J is None else J)


def corpus_for(cfg: RunConfig, J: int | None = None) -> list:
    g = grid_for(cfg, J)
    return cp.halfspace_corpus(g, cfg.fields, cfg.random_fields, cfg.seed, cfg.padding)


def pole_for(cfg: RunConfig, grid: DyadicGrid) -> np.ndarray:
    return cp.default_pole(grid, cfg.padding) if cfg.pole is None else np.asarray(cfg.pole, float)


def weight_exponent(scale: float, p: float, n: int) -> float:
    """Power exponent ``scale * n * min(p - 1, 1)``: inside ``(-n, n(p-1))`` for ``|scale| < 1``."""
    return scale * n * min(p - 1.0, 1.0)


def weight_spec(a: float, pole, p: float) -> str:
    return f"power a={a:.6g} pole={','.join(f'{v:g}' for v in np.atleast_1d(pole))} p={p:g}"


@lru_cache(maxsize=None)
def _weight(n: int, J: int, a: float, pole: tuple, p: float) -> Weight:
    return power_weight(_grid(n, J), a, list(pole), p)


def weight_for(cfg: RunConfig, a: float, p: float) -> Weight:
    g = grid_for(cfg)
    return _weight(cfg.n, cfg.J, float(a), tuple(pole_for(cfg, g).tolist()), float(p))


# -- measurements ---------------------------------------------------------------------------

def weak_ratio(values: np.ndarray, norm: float, cell: float, levels: int = 20) -> float:
    """``sup_lambda lambda |{|v| > lambda}| / norm`` over log-spaced levels below ``max |v|``."""
    a = np.abs(values)
    top = float(a.max(initial=0.0))
    if top == 0 or norm == 0:
        return 0.0
    lams = top * np.logspace(-3, 0, levels, endpoint=False)
    return float(max(lam * np.count_nonzero(a > lam) * cell for lam in lams) / norm)


def _l2(v, cell):
    return float(np.sqrt(np.sum(v ** 2) * cell))


def _l1(v, cell):
    return float(np.sum(np.abs(v)) * cell)


# -- suites ----------------------------------------------------------------------------------

def suite_sparseness(cfg: RunConfig) -> Report:
    rep = Report()
    g = grid_for(cfg)
    eta = Fraction(cfg.tol("eta")).limit_denominator(1 << 16)
    for k in kernels_for(cfg):
        for inst in corpus_for(cfg):
            b = build_sparse_family(k, inst.field, eta)
            verdict = b.verify(g)
            fracs = [Fraction(len(b.family.witness[q]), int(g.leaf_counts[q])) for q in b.family.members]
            worst = float(min(fracs)) if fracs else 1.0
            certs = all(float(lg.covered) <= 1 - float(eta) for lg in b.log) and b.smallbads_ok and b.evendiv_ok
            rep.add("sparseness", inst.name, worst, Threshold(">=", float(eta)), k.name,
                    extra_ok=bool(verdict) and certs)
    return rep


def _domination(k, f, eta):
    b = build_sparse_family(k, f, eta)
    return check_sparse_domination(k, f, b)


def suite_sparse_domination(cfg: RunConfig) -> Report:
    rep = Report()
    eta = Fraction(cfg.tol("eta")).limit_denominator(1 << 16)
    stab = cfg.n == 1
    for k in kernels_for(cfg):
        fine = corpus_for(cfg, cfg.J + 1) if stab else None
        for i, inst in enumerate(corpus_for(cfg)):
            d = _domination(k, inst.field, eta)
            rep.add("sparse-domination", inst.name, d.constant, Threshold("<", math.inf), k.name,
                    extra_ok=d.violations == 0)
            if stab:
                d2 = _domination(k, fine[i].field, eta)
                change = abs(d2.constant / d.constant - 1) if d.constant > 0 else math.inf
                rep.add("sparse-domination", f"{inst.name}:J{cfg.J}->J{cfg.J + 1}", change,
                        Threshold("<=", cfg.tol("stability")), k.name, extra_ok=d2.violations == 0)
    return rep


def suite_weak_l1(cfg: RunConfig) -> Report:
    rep = Report()
    g = grid_for(cfg)
    for k in kernels_for(cfg):
        op = operator(k, g)
        for inst in corpus_for(cfg):
            nrm = l1_norm(inst.field)
            rs = weak_ratio(op.S(inst.field), nrm, g.leaf_measure)
            rm = weak_ratio(op.grand_maximal(inst.field), nrm, g.leaf_measure)
            rep.add("weak-l1", f"{inst.name}:S", rs, Threshold("<=", cfg.tol("weak_l1_S")), k.name)
            rep.add("weak-l1", f"{inst.name}:M_S", rm, Threshold("<=", cfg.tol("weak_l1_MS")), k.name)
    return rep


def good_lambda_levels(f: HalfspaceField, count: int = 5) -> np.ndarray:
    """Thresholds ``m 2^-k``, ``k = 1..count``, with ``m`` the largest Carleson average."""
    g = f.grid
    m = float(np.max(carleson_masses(f) / g.sides ** g.n))
    return m * 2.0 ** -np.arange(1, count + 1)


def suite_good_lambda(cfg: RunConfig) -> Report:
    rep = Report()
    g = grid_for(cfg)
    for alpha in cfg.apertures:
        cone = ConeConfig(alpha)
        for inst in corpus_for(cfg):
            for k, lam in enumerate(good_lambda_levels(inst.field)):
                good = cz_decompose(inst.field, lam).good
                Ag = area(good, cone).values
                l1 = _l1(Ag, g.leaf_measure)
                r = _l2(Ag, g.leaf_measure) ** 2 / (lam * l1) if l1 > 0 else 0.0
                rep.add("good-lambda", f"{inst.name}:lam{k + 1}", r, Threshold("<=", cfg.tol("good_lambda")),
                        alpha=alpha)
    return rep


def counterexample_profile(cfg: RunConfig, levels) -> tuple[list, list]:
    """``max_z Af`` and ``||Cf||_inf`` for ``(t + |x - x0|)^-1`` on ``Q_1-hat`` at each depth."""
    amax, cmax = [], []
    for J in levels:
        g = _grid(cfg.n, J)
        f = cp.named_field(g, "counterexample", cfg.padding)
        amax.append(float(area(f, ConeConfig(cfg.apertures[0])).values.max()))
        cmax.append(float(carleson(f, "full").values.max()))
    return amax, cmax


def suite_area_carleson(cfg: RunConfig) -> Report:
    rep = Report()
    g = grid_for(cfg)
    C0 = cfg.tol("ac_bracket")
    for alpha in cfg.apertures:
        cone = ConeConfig(alpha)
        for inst in corpus_for(cfg):
            a2 = _l2(area(inst.field, cone).values, g.leaf_measure)
            c2 = _l2(carleson(inst.field, "full").values, g.leaf_measure)
            r = a2 / c2 if c2 > 0 else math.inf
            rep.add("area-carleson", inst.name, max(r, 1 / r), Threshold("<=", C0), alpha=alpha)
    levels = [J for J in (cfg.J - 2, cfg.J - 1, cfg.J) if J >= cp.support_level(cfg.padding) + 1]
    if len(levels) < 3:
        rep.warnings.append("area-carleson: the counterexample needs J >= support level + 3")
    amax, cmax = counterexample_profile(cfg, levels)
    for J, prev, cur in zip(levels[1:], amax, amax[1:]):
        rep.add("area-carleson", f"counterexample:maxA-growth:J{J}", cur - prev, Threshold(">", 0.0),
                alpha=cfg.apertures[0])
    # ||Cf||_inf climbs toward a finite limit as the sliver fills in; bounded means its
    # increments contract geometrically, while max Af gains a roughly fixed step per level
    d = np.diff(cmax)
    ratio = max(d[-1], 0.0) / d[-2] if len(d) >= 2 and d[-2] > 0 else (0.0 if len(d) >= 2 else math.inf)
    rep.add("area-carleson", "counterexample:C-contraction", float(ratio),
            Threshold("<=", cfg.tol("counterexample_C")))
    return rep


def maximal_bounds(p: float, n: int) -> tuple[float, float]:
    """Doob's ``q`` for ``M^D_w``; the interpolation bound ``2 (q 3^n)^(1/p)`` for ``M^{3D}_w``."""
    q = p / (p - 1)
    return q, 2.0 * (q * 3 ** n) ** (1 / p)


def suite_weighted_maximal(cfg: RunConfig) -> Report:
    rep = Report()
    g = grid_for(cfg)
    pole = pole_for(cfg, g)
    for p in cfg.p_values:
        dbound, cbound = maximal_bounds(p, cfg.n)
        for s in cfg.weight_scales:
            a = weight_exponent(s, p, cfg.n)
            w = weight_for(cfg, a, p)
            spec = weight_spec(a, pole, p)
            fam = cp.boundary_corpus(g, cfg.boundary_random, cfg.seed, cfg.padding, pole, w)
            for mode, bound, tag in (("dyadic_weighted", dbound, "M^D_w"), ("centered3_weighted", cbound, "M^3D_w")):
                best = 0.0
                for b in fam:
                    den = lp_norm(b.field, p, w)
                    if den > 0:
                        best = max(best, lp_norm(maximal(b.field, mode, w).field, p, w) / den)
                rep.add("weighted-maximal", tag, best, Threshold("<=", bound), weight=spec, p=p)
    return rep


def sweep_weights_list(cfg: RunConfig):
    """``(exponent, p, w)`` for the sweep; ``w = |x - pole|^a`` is the A_p weight."""
    out = []
    for p in cfg.p_values:
        for s in cfg.sweep_scales:
            a = weight_exponent(s, p, cfg.n)
            out.append((a, p, weight_for(cfg, a, p)))
    return out


def duality_defect(w: Weight) -> float:
    """Largest relative gap between ``[w]^{1/p}`` and ``[nu]^{1/q}`` profiles on the shared family."""
    fam = ap_cube_family(w.grid)
    nu = w.dual()
    pw = ap_profile(w, fam) ** (1 / w.p)
    pn = ap_profile(nu, fam) ** (1 / nu.p)
    prof = float(np.max(np.abs(pw - pn) / pw))
    sup = abs(ap_characteristic(w, fam) ** (1 / w.p) - ap_characteristic(nu, fam) ** (1 / nu.p))
    return max(prof, sup / ap_characteristic(w, fam) ** (1 / w.p))


def suite_weight_duality(cfg: RunConfig) -> Report:
    rep = Report()
    pole = pole_for(cfg, grid_for(cfg))
    for a, p, w in sweep_weights_list(cfg):
        rep.add("weight-duality", "profile", duality_defect(w), Threshold("<=", cfg.tol("duality")),
                weight=weight_spec(a, pole, p), p=p)
    return rep


def suite_reverse_duality(cfg: RunConfig) -> Report:
    rep = Report()
    pole = pole_for(cfg, grid_for(cfg))
    mins = []
    for a, p, w in sweep_weights_list(cfg):
        nu = w.dual()
        q = nu.p
        ratios = [construct_dual_function(inst.field, nu, q).ratio for inst in corpus_for(cfg)]
        m = min(ratios) if ratios else 0.0
        mins.append(m)
        rep.add("reverse-duality", "per-weight-min", m, Threshold(">=", 1 / (p * q)),
                weight=weight_spec(a, pole, p), p=p)
    if mins:
        spread = max(mins) / min(mins) if min(mins) > 0 else math.inf
        rep.add("reverse-duality", "spread", spread, Threshold("<=", cfg.tol("reverse_spread")))
    return rep


def nontangential_ratio(k: Kernel, f: BoundaryField, nu: Weight, cone: ConeConfig) -> float:
    den = lp_norm(f, nu.p, nu)
    if den == 0:
        return 0.0
    Nf = nontangential(apply_Sstar(k, f), cone)
    return lp_norm(Nf.field, nu.p, nu) / den


@dataclass(frozen=True)
class SweepRow:
    kernel: str
    a: float
    p: float
    q: float
    char_nu: float
    ratio: float


@dataclass
class SweepTable:
    rows: list
    slopes: dict        # (kernel, p) -> fitted slope of log ratio against log [nu]_{A_q}

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("kernel", "a", "p", "q", "char_nu", "ratio"))
        for r in self.rows:
            w.writerow((r.kernel,) + tuple(repr(float(x)) for x in (r.a, r.p, r.q, r.char_nu, r.ratio)))
        w.writerow(())
        w.writerow(("kernel", "p", "slope"))
        for (kn, p), s in self.slopes.items():
            w.writerow((kn, repr(float(p)), repr(float(s))))
        return buf.getvalue()


def fitted_slope(chars, ratios) -> float:
    x = np.log(np.asarray(chars, float))
    y = np.log(np.asarray(ratios, float))
    if len(x) < 2 or np.ptp(x) < 1e-12:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def sweep_weights(cfg: RunConfig) -> SweepTable:
    """Best ``||N(S* f)||_{L_q(nu)} / ||f||_{L_q(nu)}`` over the boundary corpus per weight."""
    g = grid_for(cfg)
    pole = pole_for(cfg, g)
    cone = ConeConfig(cfg.apertures[0])
    rows, slopes = [], {}
    for k in kernels_for(cfg):
        for p in cfg.p_values:
            chars, ratios = [], []
            for s in cfg.sweep_scales:
                a = weight_exponent(s, p, cfg.n)
                w = weight_for(cfg, a, p)
                nu = w.dual()
                fam = cp.boundary_corpus(g, cfg.boundary_random, cfg.seed, cfg.padding, pole, nu)
                best = max(nontangential_ratio(k, b.field, nu, cone) for b in fam)
                ch = ap_characteristic(nu)
                rows.append(SweepRow(k.name, a, p, nu.p, ch, best))
                chars.append(ch)
                ratios.append(best)
            slopes[(k.name, p)] = fitted_slope(chars, ratios)
    return SweepTable(rows, slopes)


def suite_nontangential_weighted(cfg: RunConfig) -> Report:
    rep = Report()
    pole = pole_for(cfg, grid_for(cfg))
    table = sweep_weights(cfg)
    alpha = cfg.apertures[0]
    for r in table.rows:
        expo = max(1.0, r.p / r.q)
        rep.add("nontangential-weighted", f"q={r.q:g}", r.ratio / r.char_nu ** expo,
                Threshold("<=", cfg.tol("nontangential")), r.kernel, weight_spec(r.a, pole, r.p), r.p, alpha)
    for (kn, p), s in table.slopes.items():
        q = p / (p - 1)
        rep.add("nontangential-weighted", f"slope:q={q:g}", s,
                Threshold("<=", max(1.0, p / q) + cfg.tol("slope_margin")), kn, p=p, alpha=alpha)
    return rep


def _flat_jump() -> Kernel:
    return cauchy_jump_kernel(LipschitzGraph(np.array([-1.0, 2.0]), np.array([0.0, 0.0])))


def _poisson_of_indicator(t, y, a, b):
    return (np.arctan((b - y) / t) - np.arctan((a - y) / t)) / math.pi


def semigroup_defect(J: int, a: float, b: float, s: float = 0.25, t: float = 0.25) -> float:
    """``max |P_s P_t f - P_{s+t} f|`` at the leaf centers of ``[0, 1)`` for ``f = 1_[a,b)``.

    ``P_t f`` enters ``P_s`` as leaf-center samples on the root plus its exact values
    outside the root (integrated by quadrature), so only the discretization remains.
    """
    k = _flat_jump()
    g = _grid(1, J)
    c = g.leaf_centers[:, 0]
    f = BoundaryField(g, ((c >= a) & (c < b)).astype(float))
    x = g.leaf_centers
    Ptf = BoundaryField(g, theta(k, f, np.full(len(c), t), x))
    inner = theta(k, Ptf, np.full(len(c), s), x)

    def tail(xc):
        kern = lambda y: s / math.pi / (s * s + (xc - y) ** 2) * _poisson_of_indicator(t, y, a, b)
        lo = spi.quad(kern, -np.inf, 0.0, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
        hi = spi.quad(kern, 1.0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
        return lo + hi

    outer = np.array([tail(xc) for xc in c])
    exact = theta(k, f, np.full(len(c), s + t), x)
    return float(np.max(np.abs(inner + outer - exact)))


SEMIGROUP_FIELDS = (("Q1", 0.25, 0.5), ("narrow", 0.375, 0.4375), ("half", 0.0, 0.5))


def suite_semigroup(cfg: RunConfig) -> Report:
    rep = Report()
    levels = list(cfg.semigroup_levels)
    for name, a, b in SEMIGROUP_FIELDS:
        errs = [semigroup_defect(J, a, b) for J in levels]
        for J, e0, e1 in zip(levels[1:], errs, errs[1:]):
            rep.add("semigroup", f"{name}:J{J - 1}->J{J}", e0 / e1 if e1 > 0 else math.inf,
                    Threshold(">=", cfg.tol("semigroup_factor")), "cauchy-jump flat")
    return rep


def adjoint_defects(k: Kernel, grid: DyadicGrid, pairs: int, seed: int) -> list[float]:
    """Relative gaps ``|<Sf, g> - <f, S* g>|`` for random pairs; positive pairs are measured
    against the pairing itself, signed pairs against ``||Sf||_2 ||g||_2``."""
    from .fields import pairing_boundary, pairing_halfspace
    rng = np.random.default_rng(seed + 104729)
    op = operator(k, grid)
    out = []
    for i in range(pairs):
        fv = rng.normal(size=grid.num_cubes)
        gv = rng.normal(size=grid.num_leaves)
        if i % 2 == 0:
            fv, gv = np.abs(fv), np.abs(gv)
        f, gb = HalfspaceField(grid, fv), BoundaryField(grid, gv)
        Sf = BoundaryField(grid, op.S(f))
        lhs = pairing_boundary(Sf, gb)
        rhs = pairing_halfspace(f, HalfspaceField(grid, op.Sstar(gb)))
        if i % 2 == 0:
            scale = max(abs(lhs), abs(rhs))
        else:
            scale = lp_norm(Sf, 2) * lp_norm(gb, 2)
        out.append(abs(lhs - rhs) / scale if scale > 0 else 0.0)
    return out


def suite_adjoint(cfg: RunConfig) -> Report:
    rep = Report()
    g = grid_for(cfg)
    for k in kernels_for(cfg):
        rel = adjoint_defects(k, g, cfg.adjoint_pairs, cfg.seed)
        rep.add("adjoint", f"{cfg.adjoint_pairs}-pairs", max(rel, default=0.0),
                Threshold("<=", cfg.tol("adjoint")), k.name)
    return rep


# acceptance criterion number -> suite
CRITERIA = {1: "sparseness", 2: "sparse-domination", 3: "weak-l1", 4: "good-lambda", 5: "area-carleson",
            6: "weighted-maximal", 7: "weight-duality", 8: "reverse-duality", 9: "nontangential-weighted",
            10: "semigroup", 11: "adjoint"}

REGISTRY = {
    "sparseness": suite_sparseness,
    "sparse-domination": suite_sparse_domination,
    "weak-l1": suite_weak_l1,
    "good-lambda": suite_good_lambda,
    "area-carleson": suite_area_carleson,
    "weighted-maximal": suite_weighted_maximal,
    "weight-duality": suite_weight_duality,
    "reverse-duality": suite_reverse_duality,
    "nontangential-weighted": suite_nontangential_weighted,
    "semigroup": suite_semigroup,
    "adjoint": suite_adjoint,
}


def run_suite(cfg: RunConfig, suite: str) -> Report:
    names = SUITES if suite == "all" else (suite,)
    rep = Report(config=config_text(cfg))
    for s in names:
        if s not in REGISTRY:
            raise InputError(f"unknown suite {s!r}")
        part = REGISTRY[s](cfg)
        if not part.rows:
            rep.warnings.append(f"{s}: no instances (empty corpus)")
        rep.extend(part)
    return rep


def run_config(cfg: RunConfig) -> Report:
    rep = Report(config=config_text(cfg))
    for s in cfg.suite_list():
        part = run_suite(cfg, s)
        rep.extend(part)
    return rep
