"""Maximal-type functionals: ``M``, ``M^D_w``, ``M^{3D}_w``, ``C``, ``C^D_nu``,
``C^{3D}_nu``, the area functional ``A`` and the non-tangential ``N``, ``N^D``.

Boundary outputs are leaf-cell values; functionals defined pointwise are
evaluated at leaf centers.  Cones and balls use the sup-norm on ``R^n``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicGrid
from .errors import InputError
from .fields import (BoundaryField, HalfspaceField, box_cell_fractions, cone_hits,
                     cone_measure, dump_field, whitney_boxes, whitney_measures)
from .weights import Weight


@dataclass(frozen=True)
class ConeConfig:
    aperture: float = 1.0
    t_max: float = math.inf

    def __post_init__(self):
        if not self.aperture > 0:
            raise InputError("cone aperture must be positive")
        if not self.t_max > 0:
            raise InputError("cone height must be positive")


@dataclass(frozen=True)
class FunctionalResult:
    field: BoundaryField
    name: str
    mode: str = ""
    params: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def grid(self) -> DyadicGrid:
        return self.field.grid

    def to_text(self) -> str:
        return dump_field(self.field)

    def to_csv(self) -> str:
        """``z1[,z2],value`` rows at the leaf centers."""
        g = self.grid
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"z{i + 1}" for i in range(g.n)] + ["value"])
        for z, v in zip(g.leaf_centers, self.values):
            w.writerow([repr(float(c)) for c in z] + [repr(float(v))])
        return buf.getvalue()


def _result(grid, vals, name, mode="", **params):
    return FunctionalResult(BoundaryField(grid, np.maximum(vals, 0.0)), name, mode, params)


def _cube_sums(grid: DyadicGrid, leaf_vals: np.ndarray) -> np.ndarray:
    return np.add.reduceat(leaf_vals[grid.cube_leaf_idx], grid.cube_leaf_ptr[:-1])


def _max_over_ancestors(grid: DyadicGrid, cube_vals: np.ndarray) -> np.ndarray:
    return cube_vals[grid.leaf_ancestors].max(axis=1)


def _weight_values(grid, w):
    if w is None:
        return np.ones(grid.num_leaves)
    return w.values if isinstance(w, Weight) else np.asarray(getattr(w, "values", w), float)


# -- Hardy-Littlewood type --------------------------------------------------------

def _box_sums(grid: DyadicGrid, dens: np.ndarray, lo_idx, hi_idx) -> np.ndarray:
    """Sums of a leaf array over index boxes ``[lo, hi)`` (clipped), by prefix sums."""
    shape = grid.leaf_shape
    cum = dens.reshape(shape)
    for ax in range(grid.n):
        cum = np.cumsum(cum, axis=ax)
    cum = np.pad(cum, [(1, 0)] * grid.n)
    lo = np.clip(lo_idx, 0, np.array(shape))
    hi = np.clip(hi_idx, 0, np.array(shape))
    out = np.zeros(len(lo))
    for bits in np.ndindex(*([2] * grid.n)):
        b = np.array(bits)
        corner = np.where(b == 1, hi, lo)
        out += (-1) ** (grid.n - b.sum()) * cum[tuple(corner.T)]
    return out


def maximal(f: BoundaryField, mode: str = "centered", w: Weight | None = None) -> FunctionalResult:
    """``mode``: ``"centered"`` (cubes centered at leaf centers with half-widths
    ``(k + 1/2) h``), ``"dyadic_weighted"`` (``M^D_w``) or ``"centered3_weighted"``
    (``M^{3D}_w``: averages over ``3Q`` normalized by ``w(3Q)``)."""
    g = f.grid
    a = np.abs(f.values)
    if mode in ("dyadic_weighted", "centered3_weighted") and w is None:
        raise InputError(f"mode {mode!r} needs a weight")
    wv = _weight_values(g, w)
    if mode == "centered":
        idx = np.indices(g.leaf_shape).reshape(g.n, -1).T
        best = a.copy()
        num_d = a * wv
        for k in range(1, max(g.leaf_shape) + 1):
            lo, hi = idx - k, idx + k + 1
            num = _box_sums(g, num_d, lo, hi)
            if w is None:
                den = float(2 * k + 1) ** g.n
            else:
                den = _box_sums(g, wv, lo, hi)
            best = np.maximum(best, num / den)
        return _result(g, best, "M", mode)
    if mode == "dyadic_weighted":
        num = _cube_sums(g, a * wv)
        den = _cube_sums(g, wv)
        return _result(g, _max_over_ancestors(g, num / den), "M", mode)
    if mode == "centered3_weighted":
        from .operators import neighbors
        nb = neighbors(g)
        num_c = _cube_sums(g, a * wv)
        den_c = _cube_sums(g, wv)
        num = np.zeros(g.num_cubes)
        den = np.zeros(g.num_cubes)
        for k in range(nb.shape[1]):
            ok = nb[:, k] >= 0
            num[ok] += num_c[nb[ok, k]]
            den[ok] += den_c[nb[ok, k]]
        return _result(g, _max_over_ancestors(g, num / den), "M", mode)
    raise InputError(f"unknown maximal mode {mode!r}")


# -- Carleson functionals -------------------------------------------------------------

def carleson_cube_family(grid: DyadicGrid, shifts=(0.0, 1 / 3, 2 / 3)):
    """Dyadic cubes and their translates by ``s * side`` for ``s`` in ``shifts`` per axis,
    keeping translates that meet the root box."""
    glo, ghi = grid.extent
    combos = np.array(list(np.ndindex(*([len(shifts)] * grid.n))))
    svals = np.asarray(shifts)[combos]
    los, sides = [], []
    for sv in svals:
        lo = grid.lows + sv[None, :] * grid.sides[:, None]
        keep = np.all(lo < ghi, axis=1)
        los.append(lo[keep])
        sides.append(grid.sides[keep])
    return np.concatenate(los), np.concatenate(sides)


def carleson(f: HalfspaceField, mode: str = "full", nu: Weight | None = None, c: float = 15.0,
             shifts=(0.0, 1 / 3, 2 / 3)) -> FunctionalResult:
    """``"full"``: ``sup |Q|^-1 ∬_{Q-hat}|f|`` over dyadic and shifted cubes;
    ``"dyadic_weighted"``: ``C^D_nu``; ``"c3d"``: ``C^{3D}_nu`` with ``nu(cQ)`` normalization."""
    g = f.grid
    a = np.abs(f.values)
    if mode == "full":
        lo, side = carleson_cube_family(g, shifts)
        z = g.leaf_centers
        best = np.zeros(g.num_leaves)
        step = max(1, (1 << 22) // g.num_cubes)
        nz = np.nonzero(a)[0]
        if len(nz) == 0:
            return _result(g, best, "C", mode)
        t0, t1, x0, x1 = whitney_boxes(g, nz)
        for s in range(0, len(side), step):
            lo_s, sd = lo[s:s + step], side[s:s + step]
            m = np.minimum(t1[None, :], sd[:, None]) - t0[None, :]
            m = np.maximum(m, 0.0)
            for i in range(g.n):
                m = m * np.maximum(0.0, np.minimum(x1[None, :, i], lo_s[:, None, i] + sd[:, None])
                                   - np.maximum(x0[None, :, i], lo_s[:, None, i]))
            val = (m @ a[nz]) / sd ** g.n
            inside = np.all((z[None, :, :] >= lo_s[:, None, :]) & (z[None, :, :] < lo_s[:, None, :] + sd[:, None, None]), axis=2)
            best = np.maximum(best, np.max(np.where(inside, val[:, None], 0.0), axis=0))
        return _result(g, best, "C", mode, shifts=len(shifts))
    if mode in ("dyadic_weighted", "dyadic"):
        nuv = _weight_values(g, nu)
        nuQ = _cube_sums(g, nuv) * g.leaf_measure
        own = a * (g.sides / 2) * nuQ
        from .operators import descendant_matrix
        num = descendant_matrix(g) @ own
        return _result(g, _max_over_ancestors(g, num / nuQ), "C", mode)
    if mode == "c3d":
        if c < 1:
            raise InputError("the dilation in C^{3D} must be at least 1")
        from .operators import descendant_matrix, neighbors
        nuv = _weight_values(g, nu)
        nuQ = _cube_sums(g, nuv) * g.leaf_measure
        D = descendant_matrix(g)
        own = D @ (a * (g.sides / 2) * nuQ)
        up1 = _ancestor_values(g, a, 1)
        up2 = _ancestor_values(g, a, 2)
        own = own + g.sides * nuQ * (up1 + up2)
        nb = neighbors(g)
        num = np.zeros(g.num_cubes)
        for k in range(nb.shape[1]):
            ok = nb[:, k] >= 0
            num[ok] += own[nb[ok, k]]
        from .fields import BoxMeasure
        bm = nu.boxes if isinstance(nu, Weight) else BoxMeasure(g, nuv)
        center = g.lows + g.sides[:, None] / 2
        half = c * g.sides[:, None] / 2
        den = bm(center - half, center + half)
        return _result(g, _max_over_ancestors(g, num / den), "C", mode, c=c)
    raise InputError(f"unknown Carleson mode {mode!r}")


def _ancestor_values(g: DyadicGrid, v: np.ndarray, k: int) -> np.ndarray:
    idx = np.arange(g.num_cubes)
    for _ in range(k):
        idx = np.where(idx >= 0, g.parent[np.maximum(idx, 0)], -1)
    return np.where(idx >= 0, v[np.maximum(idx, 0)], 0.0)


# -- cones ----------------------------------------------------------------------------------

def _points(g: DyadicGrid, z):
    return g.leaf_centers if z is None else np.asarray(z, float).reshape(-1, g.n)


def area(f: HalfspaceField, cone: ConeConfig = ConeConfig(), z=None) -> FunctionalResult | np.ndarray:
    """``Af(z) = ∬_{|x-z|_inf < a t} |f| t^-n``, exact per clipped cell."""
    g = f.grid
    pts = _points(g, z)
    a = np.abs(f.values)
    nz = np.nonzero(a)[0]
    out = np.zeros(len(pts))
    if len(nz):
        t0, t1, x0, x1 = whitney_boxes(g, nz)
        step = max(1, (1 << 20) // len(nz))
        for s in range(0, len(pts), step):
            m = cone_measure(pts[s:s + step, None, :], cone.aperture, cone.t_max, t0[None], t1[None],
                             x0[None], x1[None], power=g.n)
            out[s:s + step] = m @ a[nz]
    if z is not None:
        return out
    return _result(g, out, "A", aperture=cone.aperture)


def nontangential(f: HalfspaceField, cone: ConeConfig = ConeConfig(), z=None) -> FunctionalResult | np.ndarray:
    """``Nf(z)``: max of ``|f|`` over Whitney cells meeting the open cone in positive measure."""
    g = f.grid
    pts = _points(g, z)
    a = np.abs(f.values)
    nz = np.nonzero(a)[0]
    out = np.zeros(len(pts))
    if len(nz):
        t0, t1, x0, x1 = whitney_boxes(g, nz)
        step = max(1, (1 << 22) // len(nz))
        for s in range(0, len(pts), step):
            hit = cone_hits(pts[s:s + step, None, :], cone.aperture, cone.t_max, t0[None], t1[None], x0[None], x1[None])
            out[s:s + step] = np.max(np.where(hit, a[nz][None], 0.0), axis=1)
    if z is not None:
        return out
    return _result(g, out, "N", aperture=cone.aperture)


def dyadic_nontangential(f: HalfspaceField) -> FunctionalResult:
    """``N^D f(z) = max over dyadic Q ∋ z of |f|`` on ``Q^w``."""
    g = f.grid
    return _result(g, _max_over_ancestors(g, np.abs(f.values)), "N^D")
