"""Test-field corpora: named adversarial fields, random sub-box fields, boundary data.

Every field lives in the Carleson box of the support cube ``Q_1`` so the sparse
builder's top cover is meaningful.  Fields are defined in continuum terms
(cell averages of box indicators, or samples at Whitney centers), so the same
field can be laid on grids of different depth.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicCube, DyadicGrid
from .errors import InputError
from .fields import (BoundaryField, HalfspaceField, box_cell_fractions, whitney_centers,
                     whitney_measures)
from .kernels import LipschitzGraph, Kernel, cauchy_kernel, poisson_kernel, riesz_kernel

NAMED_FIELDS = ("coarse-cell", "fine-cell", "carleson-box", "counterexample",
                "dipole-horizontal", "dipole-vertical", "boundary-layer", "oscillating")
NAMED_BOUNDARY = ("support-cube", "pole-cell", "pole-interval", "far-interval", "dual-power")


@dataclass(frozen=True)
class Instance:
    name: str
    field: HalfspaceField


@dataclass(frozen=True)
class BoundaryInstance:
    name: str
    field: BoundaryField


def support_level(padding: int) -> int:
    if padding < 2 or padding & (padding - 1):
        raise InputError("padding must be a power of two >= 2")
    return padding.bit_length() - 1


def support_cube_of(grid: DyadicGrid, padding: int = 4) -> DyadicCube:
    """The cube ``Q_1`` of side ``1/padding`` ending at the center of the first root cube."""
    L = support_level(padding)
    if L > grid.J:
        raise InputError("padding exceeds the grid depth")
    c = (padding - 1) // 2
    return DyadicCube(L, tuple(a * padding + c for a in grid.lo))


def default_pole(grid: DyadicGrid, padding: int = 4) -> np.ndarray:
    """Center of ``Q_1``: a lattice point of every level below it."""
    q = support_cube_of(grid, padding)
    return q.lo + grid.offset + q.side / 2


# -- half-space fields ---------------------------------------------------------------

def _box_average(grid: DyadicGrid, t_lo, t_hi, lo, hi) -> np.ndarray:
    return box_cell_fractions(grid, t_lo, t_hi, np.asarray(lo, float), np.asarray(hi, float)) / whitney_measures(grid)


def _child(q: DyadicCube, k: int) -> DyadicCube:
    return q.children()[k]


def named_field(grid: DyadicGrid, name: str, padding: int = 4) -> HalfspaceField:
    q1 = support_cube_of(grid, padding)
    s = q1.side
    lo = q1.lo + grid.offset
    hi = lo + s
    v = np.zeros(grid.num_cubes)
    if name == "coarse-cell":
        v[grid.index(_child(q1, 0))] = 1.0
    elif name == "fine-cell":
        c = q1
        for _ in range(min(3, grid.J - q1.level)):
            c = _child(c, 0)
        v[grid.index(c)] = 1.0
    elif name == "carleson-box":
        v = _box_average(grid, 0.0, s, lo, hi)
    elif name == "counterexample":
        t, x = whitney_centers(grid)
        x0 = lo + s / 2
        inside = np.all((grid.lows >= lo) & (grid.lows + grid.sides[:, None] <= hi), axis=1)
        v = np.where(inside, 1.0 / (t + np.linalg.norm(x - x0, axis=1)), 0.0)
    elif name == "dipole-horizontal":
        if q1.level + 1 > grid.J:
            raise InputError("grid too shallow for the dipole")
        kids = q1.children()
        v[grid.index(kids[0])] = 1.0
        v[grid.index(kids[-1])] = -1.0
    elif name == "dipole-vertical":
        if q1.level + 1 > grid.J:
            raise InputError("grid too shallow for the dipole")
        v[grid.index(q1)] = 1.0
        for kid in q1.children():
            v[grid.index(kid)] = -2.0
    elif name == "boundary-layer":
        # at least the finest represented layer, so coarse grids still see it
        v = _box_average(grid, 0.0, max(s / 8, 2.0 ** -grid.J), lo, hi)
    elif name == "oscillating":
        t, x = whitney_centers(grid)
        inside = np.all((grid.lows >= lo) & (grid.lows + grid.sides[:, None] <= hi), axis=1)
        wave = np.prod(np.cos(8 * np.pi * (x - lo) / s), axis=1)
        v = np.where(inside, wave, 0.0)
    else:
        raise InputError(f"unknown named field {name!r}")
    return HalfspaceField(grid, v)


def random_fields(grid: DyadicGrid, count: int, seed: int = 0, padding: int = 4) -> list[Instance]:
    """Sums of one to three box indicators inside ``Q_1-hat`` with normal amplitudes."""
    rng = np.random.default_rng(seed)
    q1 = support_cube_of(grid, padding)
    s = q1.side
    lo = q1.lo + grid.offset
    out = []
    for i in range(count):
        v = np.zeros(grid.num_cubes)
        for _ in range(int(rng.integers(1, 4))):
            tb = s * rng.uniform(0.05, 1.0)
            ta = tb * rng.uniform(0.0, 0.7)
            width = s * rng.uniform(0.1, 1.0, grid.n)
            blo = lo + (s - width) * rng.uniform(0.0, 1.0, grid.n)
            v += rng.normal() * _box_average(grid, ta, tb, blo, blo + width)
        out.append(Instance(f"random-{i:02d}", HalfspaceField(grid, v)))
    return out


def halfspace_corpus(grid: DyadicGrid, names=NAMED_FIELDS, random_count: int = 16, seed: int = 0,
                     padding: int = 4) -> list[Instance]:
    out = [Instance(nm, named_field(grid, nm, padding)) for nm in names]
    return out + random_fields(grid, random_count, seed, padding)


# -- boundary fields --------------------------------------------------------------------

def _cube_indicator(grid: DyadicGrid, lo, side) -> np.ndarray:
    c = grid.leaf_centers
    return np.all((c >= lo) & (c < lo + side), axis=1).astype(float)


def named_boundary(grid: DyadicGrid, name: str, padding: int = 4, pole=None, weight=None) -> BoundaryField:
    q1 = support_cube_of(grid, padding)
    lo = q1.lo + grid.offset
    pole = default_pole(grid, padding) if pole is None else np.asarray(pole, float)
    h = grid.leaf_side
    if name == "support-cube":
        v = _cube_indicator(grid, lo, q1.side)
    elif name == "pole-cell":
        v = _cube_indicator(grid, pole, h)
    elif name == "pole-interval":
        v = _cube_indicator(grid, pole - 4 * h, 8 * h)
    elif name == "far-interval":
        glo, ghi = grid.extent
        v = _cube_indicator(grid, glo, (ghi - glo)[0] / 8)
    elif name == "dual-power":
        # sigma 1_{Q_1}, the standard extremal shape for weighted maximal operators
        if weight is None:
            v = _cube_indicator(grid, lo, q1.side)
        else:
            v = _cube_indicator(grid, lo, q1.side) * weight.values ** (-1.0 / (weight.p - 1))
    else:
        raise InputError(f"unknown boundary field {name!r}")
    return BoundaryField(grid, v)


def random_boundary(grid: DyadicGrid, count: int, seed: int = 0) -> list[BoundaryInstance]:
    """Random signed step functions: a few dyadic-aligned bumps with normal heights."""
    rng = np.random.default_rng(seed + 7919)
    glo, ghi = grid.extent
    out = []
    for i in range(count):
        v = np.zeros(grid.num_leaves)
        for _ in range(int(rng.integers(1, 5))):
            j = int(rng.integers(1, grid.J + 1))
            side = 2.0 ** -j
            cells = np.floor((ghi - glo) / side).astype(int)
            corner = glo + side * rng.integers(0, cells)
            v += rng.normal() * _cube_indicator(grid, corner, side)
        out.append(BoundaryInstance(f"step-{i:02d}", BoundaryField(grid, v)))
    return out


def boundary_corpus(grid: DyadicGrid, random_count: int = 8, seed: int = 0, padding: int = 4,
                    pole=None, weight=None) -> list[BoundaryInstance]:
    out = [BoundaryInstance(nm, named_boundary(grid, nm, padding, pole, weight)) for nm in NAMED_BOUNDARY]
    return out + random_boundary(grid, random_count, seed)


# -- kernels -------------------------------------------------------------------------------

def default_graph() -> LipschitzGraph:
    """A wavy Lipschitz graph with breakpoints on the 1/16 lattice of ``[-1, 2]``."""
    xs = np.arange(-16, 33) / 16
    ys = 0.12 * np.sin(2 * np.pi * xs) + 0.04 * np.sin(6 * np.pi * xs)
    return LipschitzGraph(xs, ys)


def builtin_kernels(n: int) -> list[Kernel]:
    if n == 1:
        return [poisson_kernel(1), riesz_kernel(1, 1), cauchy_kernel(default_graph(), "re")]
    return [poisson_kernel(2), riesz_kernel(1, 2), riesz_kernel(2, 2)]
