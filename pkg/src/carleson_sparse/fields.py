"""Piecewise-constant fields on the boundary grid and on half-space Whitney cells.

A :class:`BoundaryField` has one value per leaf cell.  A :class:`HalfspaceField`
has one value per grid cube ``Q``, held on its Whitney cell
``Q^w = (l(Q)/2, l(Q)) x Q``.  The Whitney cells of levels ``0..J`` tile the
half-space region above the root box for heights ``2^-J-1 < t < 1``; the
sliver below is not represented and every region integral can report it.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .dyadic import DyadicCube, DyadicGrid, dilate_base
from .errors import DomainError, InputError


@dataclass(frozen=True)
class BoundaryField:
    grid: DyadicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.num_leaves,):
            raise InputError(f"expected {self.grid.num_leaves} leaf values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("boundary field has non-finite values")
        object.__setattr__(self, "values", v)

    def __abs__(self):
        return BoundaryField(self.grid, np.abs(self.values))

    def __mul__(self, c):
        if isinstance(c, BoundaryField):
            return BoundaryField(self.grid, self.values * c.values)
        return BoundaryField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other):
        return BoundaryField(self.grid, self.values + other.values)

    def __sub__(self, other):
        return BoundaryField(self.grid, self.values - other.values)


@dataclass(frozen=True)
class HalfspaceField:
    grid: DyadicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.num_cubes,):
            raise InputError(f"expected {self.grid.num_cubes} Whitney values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("half-space field has non-finite values")
        object.__setattr__(self, "values", v)

    def __abs__(self):
        return HalfspaceField(self.grid, np.abs(self.values))

    def __mul__(self, c):
        return HalfspaceField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other):
        return HalfspaceField(self.grid, self.values + other.values)

    def __sub__(self, other):
        return HalfspaceField(self.grid, self.values - other.values)

    @property
    def support(self) -> np.ndarray:
        return np.nonzero(self.values)[0]


# -- Whitney cell geometry ----------------------------------------------------

def whitney_boxes(grid: DyadicGrid, idx=None):
    """``(t_lo, t_hi, x_lo, x_hi)`` arrays of the Whitney cells of ``idx`` (all cubes by default)."""
    idx = np.arange(grid.num_cubes) if idx is None else np.asarray(idx)
    s = grid.sides[idx]
    lo = grid.lows[idx]
    return s / 2, s, lo, lo + s[:, None]


def whitney_measures(grid: DyadicGrid) -> np.ndarray:
    return grid.sides / 2 * grid.sides ** grid.n


def whitney_centers(grid: DyadicGrid):
    s = grid.sides
    return 0.75 * s, grid.lows + s[:, None] / 2


# -- construction -------------------------------------------------------------

def boundary_field(grid: DyadicGrid, sampler: Callable) -> BoundaryField:
    """Midpoint samples of ``sampler(x)`` (``x`` of shape ``(m, n)``, vectorized)."""
    pts = grid.leaf_centers
    vals = np.asarray(sampler(pts if grid.n > 1 else pts), dtype=float).reshape(-1)
    if vals.shape != (grid.num_leaves,):
        vals = np.array([float(sampler(p)) for p in pts])
    bad = np.nonzero(~np.isfinite(vals))[0]
    if len(bad):
        raise InputError(f"sampler is not finite on leaf cell {grid.cube(bad[0] + grid.level_offset[grid.J])}")
    return BoundaryField(grid, vals)


def halfspace_field(grid: DyadicGrid, sampler: Callable) -> HalfspaceField:
    """Samples of ``sampler(t, x)`` at Whitney-cell centers ``(3 l/4, center of Q)``."""
    t, x = whitney_centers(grid)
    vals = np.asarray(sampler(t, x), dtype=float).reshape(-1)
    if vals.shape != (grid.num_cubes,):
        vals = np.array([float(sampler(ti, xi)) for ti, xi in zip(t, x)])
    bad = np.nonzero(~np.isfinite(vals))[0]
    if len(bad):
        raise InputError(f"sampler is not finite on the Whitney cell of {grid.cube(bad[0])}")
    return HalfspaceField(grid, vals)


def constant_boundary(grid: DyadicGrid, c: float = 1.0) -> BoundaryField:
    return BoundaryField(grid, np.full(grid.num_leaves, float(c)))


def cell_indicator(grid: DyadicGrid, cube: DyadicCube, value: float = 1.0) -> HalfspaceField:
    v = np.zeros(grid.num_cubes)
    v[grid.index(cube)] = value
    return HalfspaceField(grid, v)


def box_indicator(grid: DyadicGrid, cube: DyadicCube, value: float = 1.0) -> HalfspaceField:
    """Indicator of the Carleson box above ``cube`` (exact on Whitney cells)."""
    v = np.zeros(grid.num_cubes)
    v[grid.descendants(grid.index(cube))] = value
    return HalfspaceField(grid, v)


# -- regions ------------------------------------------------------------------

@dataclass(frozen=True)
class CarlesonBox:
    cube: DyadicCube


@dataclass(frozen=True)
class WhitneyCell:
    cube: DyadicCube


@dataclass(frozen=True)
class DilatedCarlesonBox:
    """The Carleson box ``(0, c l(Q)) x cQ`` of the dilate ``cQ``."""

    cube: DyadicCube
    c: float = 3.0


@dataclass(frozen=True)
class Cone:
    z: tuple[float, ...]
    aperture: float = 1.0
    t_max: float = math.inf


@dataclass(frozen=True)
class HalfspaceComplement:
    of: DilatedCarlesonBox


Region = Union[CarlesonBox, WhitneyCell, DilatedCarlesonBox, Cone, HalfspaceComplement]


def region_box(region, grid: DyadicGrid):
    """``(t_lo, t_hi, base_lo, base_hi)`` of a box-shaped region."""
    cube = region.cube
    lo = cube.lo + grid.offset
    s = cube.side
    if isinstance(region, CarlesonBox):
        return 0.0, s, lo, lo + s
    if isinstance(region, WhitneyCell):
        return s / 2, s, lo, lo + s
    if isinstance(region, DilatedCarlesonBox):
        base = np.array(dilate_base(lo, s, region.c))
        return 0.0, region.c * s, base[:, 0], base[:, 1]
    raise InputError(f"{region!r} is not a box region")


def overlap(a_lo, a_hi, b_lo, b_hi):
    return np.maximum(0.0, np.minimum(a_hi, b_hi) - np.maximum(a_lo, b_lo))


def box_cell_fractions(grid: DyadicGrid, t_lo, t_hi, b_lo, b_hi, idx=None) -> np.ndarray:
    """Measure of ``W_Q ∩ box`` for each Whitney cell (exact products of overlaps)."""
    wt0, wt1, wx0, wx1 = whitney_boxes(grid, idx)
    m = overlap(wt0, wt1, t_lo, t_hi)
    for i in range(grid.n):
        m = m * overlap(wx0[:, i], wx1[:, i], b_lo[i], b_hi[i])
    return m


def cone_measure(z, aperture, t_max, t_lo, t_hi, x_lo, x_hi, power: int = 0) -> np.ndarray:
    """``∫ t^-power |{x in box : |x - z|_inf < aperture t}| dt`` over ``t_lo < t < min(t_hi, t_max)``.

    Vectorized over broadcastable leading shapes; ``z``, ``x_lo``, ``x_hi`` carry a
    trailing axis of length n.  The cross-section is a product of piecewise
    linear lengths, so each piece is a polynomial integrated in closed form.
    """
    z = np.asarray(z, float)
    x_lo = np.asarray(x_lo, float)
    x_hi = np.asarray(x_hi, float)
    n = z.shape[-1]
    shape = np.broadcast_shapes(z.shape[:-1], x_lo.shape[:-1], np.shape(t_lo))
    z = np.broadcast_to(z, shape + (n,))
    x_lo = np.broadcast_to(x_lo, shape + (n,))
    x_hi = np.broadcast_to(x_hi, shape + (n,))
    a = np.broadcast_to(np.asarray(t_lo, float), shape)
    b = np.broadcast_to(np.minimum(t_hi, t_max), shape)
    al = float(aperture)
    cands = [a, b]
    for i in range(n):
        for edge in (x_lo[..., i], x_hi[..., i]):
            for s in (edge - z[..., i], z[..., i] - edge):
                cands.append(np.clip(s / al, a, np.maximum(a, b)))
    pts = np.sort(np.stack(cands, axis=-1), axis=-1)
    lo_p, hi_p = pts[..., :-1], pts[..., 1:]
    mid = (lo_p + hi_p) / 2
    coef = np.ones(mid.shape + (1,))
    for i in range(n):
        zi = z[..., i][..., None]
        top_fixed = x_hi[..., i][..., None] < zi + al * mid
        bot_fixed = x_lo[..., i][..., None] > zi - al * mid
        A = np.where(top_fixed, x_hi[..., i][..., None], zi) - np.where(bot_fixed, x_lo[..., i][..., None], zi)
        B = np.where(top_fixed, 0.0, al) + np.where(bot_fixed, 0.0, al)
        alive = (A + B * mid) > 0
        A = np.where(alive, A, 0.0)
        B = np.where(alive, B, 0.0)
        new = np.zeros(coef.shape[:-1] + (coef.shape[-1] + 1,))
        new[..., :-1] += coef * A[..., None]
        new[..., 1:] += coef * B[..., None]
        coef = new
    width = hi_p - lo_p
    total = np.zeros(mid.shape)
    safe_lo = np.where(width > 0, lo_p, 1.0)
    safe_hi = np.where(width > 0, hi_p, 1.0)
    for k in range(coef.shape[-1]):
        e = k - power
        if e == -1:
            piece = np.log(safe_hi / safe_lo)
        else:
            piece = (safe_hi ** (e + 1) - safe_lo ** (e + 1)) / (e + 1)
        total += np.where(width > 0, coef[..., k] * piece, 0.0)
    return total.sum(axis=-1)


def cone_hits(z, aperture, t_max, t_lo, t_hi, x_lo, x_hi) -> np.ndarray:
    """True where the open cone meets the cell in positive measure."""
    z = np.asarray(z, float)
    top = np.minimum(t_hi, t_max)
    ok = np.asarray(t_lo < top)
    r = aperture * top
    for i in range(z.shape[-1]):
        ok = ok & (z[..., i] - r < x_hi[..., i]) & (z[..., i] + r > x_lo[..., i])
    return ok


def _check_in_grid(grid: DyadicGrid, t_lo, t_hi, b_lo, b_hi):
    glo, ghi = grid.extent
    if t_lo >= 1.0 or np.any(np.asarray(b_lo) >= ghi) or np.any(np.asarray(b_hi) <= glo):
        raise DomainError("region does not meet the represented half-space")


def integrate(f: HalfspaceField, region: Region) -> float:
    """Exact integral of the piecewise-constant field over a region."""
    grid = f.grid
    if isinstance(region, HalfspaceComplement):
        return float(np.sum(f.values * whitney_measures(grid))) - integrate(f, region.of)
    if isinstance(region, Cone):
        z = np.asarray(region.z, float).reshape(1, -1)
        if z.shape[1] != grid.n:
            raise DomainError("cone vertex has the wrong dimension")
        glo, ghi = grid.extent
        if region.t_max <= 2.0 ** (-grid.J - 1):
            raise DomainError("cone does not reach the represented half-space")
        nz = f.support
        t0, t1, x0, x1 = whitney_boxes(grid, nz)
        m = cone_measure(z, region.aperture, region.t_max, t0, t1, x0, x1)
        return float(np.dot(f.values[nz], m))
    t_lo, t_hi, b_lo, b_hi = region_box(region, grid)
    _check_in_grid(grid, t_lo, t_hi, b_lo, b_hi)
    return float(np.dot(f.values, box_cell_fractions(grid, t_lo, t_hi, b_lo, b_hi)))


def represented_measure(grid: DyadicGrid, region: Region) -> float:
    return integrate(HalfspaceField(grid, np.ones(grid.num_cubes)), region)


def unrepresented_measure(grid: DyadicGrid, region: Region) -> float:
    """Measure of the part of a box region not covered by grid Whitney cells."""
    if isinstance(region, (Cone, HalfspaceComplement)):
        raise InputError("only box regions have a finite nominal measure")
    t_lo, t_hi, b_lo, b_hi = region_box(region, grid)
    return (t_hi - t_lo) * float(np.prod(np.asarray(b_hi) - np.asarray(b_lo))) - represented_measure(grid, region)


def pairing_boundary(f: BoundaryField, g: BoundaryField, weight: np.ndarray | None = None) -> float:
    w = 1.0 if weight is None else weight
    return float(np.sum(f.values * g.values * w) * f.grid.leaf_measure)


def pairing_halfspace(f: HalfspaceField, g: HalfspaceField) -> float:
    return float(np.sum(f.values * g.values * whitney_measures(f.grid)))


def l1_norm(f: HalfspaceField) -> float:
    return float(np.sum(np.abs(f.values) * whitney_measures(f.grid)))


def lp_norm(f: BoundaryField, p: float, w=None) -> float:
    """``(sum |f|^p w |cell|)^(1/p)``; ``p = inf`` gives the max norm.

    ``w`` is ``None``, a :class:`BoundaryField`, or anything with a positive
    ``values`` array over the leaves (such as a ``Weight``).
    """
    if p < 1:
        raise InputError("p must be >= 1")
    a = np.abs(f.values)
    if math.isinf(p):
        if w is None:
            return float(a.max(initial=0.0))
        wv = _weight_values(w)
        return float(a[wv > 0].max(initial=0.0))
    wv = 1.0 if w is None else _weight_values(w)
    return float(np.sum(a ** p * wv) * f.grid.leaf_measure) ** (1.0 / p)


def _weight_values(w) -> np.ndarray:
    vals = getattr(w, "values", w)
    if hasattr(vals, "values") and not isinstance(vals, np.ndarray):
        vals = vals.values
    return np.asarray(vals, float)


# -- prefix-sum measures of axis-aligned boxes --------------------------------

class BoxMeasure:
    """Integrals of a leaf-piecewise-constant density over arbitrary boxes.

    The cumulative integral is exactly multilinear between lattice nodes, so
    boxes with non-lattice faces are still integrated exactly.  Boxes are
    clipped to the grid (the density vanishes outside).  Boxes at most
    ``DIRECT`` leaves wide are summed leaf by leaf instead, which avoids the
    cancellation of corner differences when the density spans many orders of
    magnitude.
    """

    DIRECT = 8

    def __init__(self, grid: DyadicGrid, density: np.ndarray):
        self.grid = grid
        d = np.asarray(density, float).reshape(grid.leaf_shape) * grid.leaf_measure
        self.d = d
        cum = d
        for ax in range(grid.n):
            cum = np.cumsum(cum, axis=ax)
        self.cum = np.pad(cum, [(1, 0)] * grid.n)
        self.glo, self.ghi = grid.extent

    def _F(self, x: np.ndarray) -> np.ndarray:
        """Cumulative integral from the grid's lower corner to points ``x`` (m, n)."""
        g = self.grid
        u = (np.clip(x, self.glo, self.ghi) - self.glo) / g.leaf_side
        shape = np.array(g.leaf_shape)
        i0 = np.clip(np.floor(u).astype(np.int64), 0, shape - 1)
        fr = u - i0
        out = np.zeros(len(x))
        for bits in np.ndindex(*([2] * g.n)):
            bits = np.array(bits)
            wgt = np.prod(np.where(bits == 1, fr, 1 - fr), axis=1)
            out += wgt * self.cum[tuple((i0 + bits).T)]
        return out

    def _direct(self, u0: np.ndarray, u1: np.ndarray) -> np.ndarray:
        """Leaf-by-leaf sum for boxes given in leaf units, clipped to the grid."""
        i0 = np.floor(u0).astype(np.int64)
        out = np.zeros(len(u0))
        for off in np.ndindex(*([self.DIRECT + 1] * self.grid.n)):
            idx = i0 + np.array(off)
            fr = np.prod(np.clip(np.minimum(u1, idx + 1) - np.maximum(u0, idx), 0.0, 1.0), axis=1)
            hit = fr > 0
            if np.any(hit):
                out[hit] += fr[hit] * self.d[tuple(idx[hit].T)]
        return out

    def __call__(self, lo, hi) -> np.ndarray:
        lo = np.atleast_2d(np.asarray(lo, float))
        hi = np.atleast_2d(np.asarray(hi, float))
        g = self.grid
        u0 = (np.clip(lo, self.glo, self.ghi) - self.glo) / g.leaf_side
        u1 = np.maximum((np.clip(hi, self.glo, self.ghi) - self.glo) / g.leaf_side, u0)
        small = np.all(u1 - u0 <= self.DIRECT - 1, axis=1)
        total = np.zeros(len(lo))
        if np.any(small):
            total[small] = self._direct(u0[small], u1[small])
        big = ~small
        if np.any(big):
            n = g.n
            for bits in np.ndindex(*([2] * n)):
                bits = np.array(bits)
                corner = np.where(bits == 1, hi[big], lo[big])
                sign = (-1) ** (n - bits.sum())
                total[big] += sign * self._F(corner)
        return np.maximum(total, 0.0)


# -- text I/O -----------------------------------------------------------------

def _cube_id(c: DyadicCube) -> str:
    return f"{c.level}:" + ",".join(str(v) for v in c.corner)


def _parse_cube_id(s: str) -> DyadicCube:
    lvl, corner = s.split(":")
    return DyadicCube(int(lvl), tuple(int(v) for v in corner.split(",")))


def _root_text(grid: DyadicGrid) -> str:
    return ",".join(map(str, grid.lo)) + ":" + ",".join(map(str, grid.hi))


def dump_field(f: Union[BoundaryField, HalfspaceField]) -> str:
    """Header ``kind n J lo:hi`` followed by ``cube-id value`` lines."""
    g = f.grid
    kind = "boundary" if isinstance(f, BoundaryField) else "halfspace"
    lines = [f"{kind} {g.n} {g.J} {_root_text(g)}"]
    base = int(g.level_offset[g.J]) if kind == "boundary" else 0
    for i, v in enumerate(f.values):
        lines.append(f"{_cube_id(g.cube(base + i))} {float(v)!r}")
    return "\n".join(lines) + "\n"


def load_field(text: str, grid: DyadicGrid | None = None):
    from .dyadic import DyadicGrid as _G
    lines = [l for l in text.splitlines() if l.strip() and not l.startswith("#")]
    kind, n, J, root = lines[0].split()
    lo, hi = root.split(":")
    lo = [int(v) for v in lo.split(",")]
    hi = [int(v) for v in hi.split(",")]
    if grid is None:
        grid = _G(int(n), lo, hi, int(J))
    elif (grid.n, grid.J, list(grid.lo), list(grid.hi)) != (int(n), int(J), lo, hi):
        raise DomainError("field header does not match the grid")
    size = grid.num_leaves if kind == "boundary" else grid.num_cubes
    base = int(grid.level_offset[grid.J]) if kind == "boundary" else 0
    vals = np.zeros(size)
    for line in lines[1:]:
        cid, v = line.split()
        vals[grid.index(_parse_cube_id(cid)) - base] = float(v)
    return BoundaryField(grid, vals) if kind == "boundary" else HalfspaceField(grid, vals)


def norm_table_csv(fields: dict, ps, weight=None) -> str:
    """CSV ``name,p,norm`` of weighted ``L_p`` norms for named boundary fields."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("name", "p", "norm"))
    for name, f in fields.items():
        for p in ps:
            w.writerow((name, repr(float(p)), repr(float(lp_norm(f, p, weight)))))
    return buf.getvalue()
