"""Muckenhoupt weights on the boundary grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np
from scipy import integrate as spi

from .dyadic import DyadicGrid
from .errors import DomainError, InputError
from .fields import BoundaryField, BoxMeasure


@dataclass(frozen=True, eq=False)
class Weight:
    """Positive leaf-constant weight ``w`` with exponent ``p`` (``q`` is the conjugate)."""

    field: BoundaryField
    p: float
    primal: "Weight | None" = dc_field(default=None, repr=False)

    def __post_init__(self):
        if not self.p > 1:
            raise InputError(f"weight exponent p must exceed 1, got {self.p}")
        if np.any(self.field.values <= 0):
            raise InputError("weight values must be strictly positive")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)

    @property
    def grid(self) -> DyadicGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @cached_property
    def boxes(self) -> BoxMeasure:
        return BoxMeasure(self.grid, self.values)

    @cached_property
    def cube_measures(self) -> np.ndarray:
        """``w(Q)`` for every grid cube, by exact leaf sums."""
        g = self.grid
        vals = self.values[g.cube_leaf_idx] * g.leaf_measure
        return np.add.reduceat(vals, g.cube_leaf_ptr[:-1])

    def measure(self, lo, hi) -> np.ndarray:
        """``w`` of arbitrary boxes (clipped to the grid)."""
        return self.boxes(lo, hi)

    def dual(self) -> "Weight":
        return dual_weight(self)

    def with_p(self, p: float) -> "Weight":
        return Weight(self.field, p)


def unit_weight(grid: DyadicGrid, p: float = 2.0) -> Weight:
    return Weight(BoundaryField(grid, np.ones(grid.num_leaves)), p)


def dual_weight(w: Weight) -> Weight:
    """``nu = w^(-q/p)`` with exponent ``q``; the dual of a dual is the original weight."""
    if w.primal is not None:
        return w.primal
    return Weight(BoundaryField(w.grid, w.values ** (-w.q / w.p)), w.q, primal=w)


# -- power weights ------------------------------------------------------------

def _corner_rect_integral(A: float, B: float, a: float) -> float:
    """``∫_0^A ∫_0^B (x^2 + y^2)^(a/2) dy dx`` through two polar triangles."""
    def tri(L, theta0):
        val, _ = spi.quad(lambda th: math.cos(th) ** (-(a + 2)), 0.0, theta0, epsabs=0, epsrel=1e-13)
        return L ** (a + 2) / (a + 2) * val
    if A == 0 or B == 0:
        return 0.0
    return tri(A, math.atan2(B, A)) + tri(B, math.atan2(A, B))


def power_cell_averages(grid: DyadicGrid, a: float, pole=None) -> np.ndarray:
    """Exact leaf averages of ``|x - pole|^a`` (Euclidean norm)."""
    n = grid.n
    if a <= -n:
        raise DomainError(f"|x|^a is not locally integrable for a = {a} <= -{n}")
    pole = np.zeros(n) if pole is None else np.asarray(pole, float).reshape(n)
    if a == 0:
        return np.ones(grid.num_leaves)
    lo = grid.leaf_lows - pole
    h = grid.leaf_side
    if n == 1:
        def F(u):
            return np.sign(u) * np.abs(u) ** (a + 1) / (a + 1)
        return (F(lo[:, 0] + h) - F(lo[:, 0])) / h
    # cells away from the pole: tensor Gauss, the integrand is smooth there
    u, wts = np.polynomial.legendre.leggauss(16)
    nodes = (u + 1) / 2 * h
    X = lo[:, 0, None, None] + nodes[None, :, None]
    Y = lo[:, 1, None, None] + nodes[None, None, :]
    out = np.einsum("i,j,cij->c", wts, wts, (X ** 2 + Y ** 2) ** (a / 2)) / 4
    # closed cell touches the pole: split at the pole into corner rectangles
    touch = np.all((lo <= 0) & (lo + h >= 0), axis=1)
    for i in np.nonzero(touch)[0]:
        x0, y0 = lo[i]
        tot = 0.0
        for A in (-x0, x0 + h):
            for B in (-y0, y0 + h):
                tot += _corner_rect_integral(A, B, a)
        out[i] = tot / h ** 2
    return out


def power_weight(grid: DyadicGrid, a: float, pole=None, p: float = 2.0) -> Weight:
    """``|x - pole|^a`` as exact leaf-cell averages; the pole defaults to the origin."""
    return Weight(BoundaryField(grid, power_cell_averages(grid, a, pole)), p)


def parse_weight(spec: str, grid: DyadicGrid) -> Weight:
    """Parse ``"power a=<real> pole=<x[,y]> p=<real>"`` or ``"unit p=<real>"``."""
    parts = spec.split()
    if not parts:
        raise InputError("empty weight spec")
    kv = {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise InputError(f"bad weight token {tok!r}")
        k, v = tok.split("=", 1)
        kv[k] = v
    p = float(kv.get("p", 2.0))
    if parts[0] == "unit":
        return unit_weight(grid, p)
    if parts[0] != "power":
        raise InputError(f"unknown weight kind {parts[0]!r}")
    pole = None
    if "pole" in kv:
        pole = [float(v) for v in kv["pole"].split(",")]
    return power_weight(grid, float(kv.get("a", 0.0)), pole, p)


# -- A_p characteristic -------------------------------------------------------

def ap_cube_family(grid: DyadicGrid):
    """Dyadic cubes of all levels plus their copies shifted by half a side in
    every axis combination, keeping those inside the root box.  Returns
    ``(lo, hi)`` arrays of shape ``(m, n)``."""
    n = grid.n
    glo, ghi = grid.extent
    los, his = [], []
    shifts = np.array(list(np.ndindex(*([2] * n))), float) / 2
    for j in range(grid.J + 1):
        sl = grid.level_slice(j)
        base = grid.lows[sl]
        s = 2.0 ** (-j)
        for sh in shifts:
            lo = base + sh * s
            hi = lo + s
            keep = np.all(hi <= ghi + 1e-15, axis=1)
            los.append(lo[keep])
            his.append(hi[keep])
    return np.concatenate(los), np.concatenate(his)


def ap_profile(w: Weight, family=None) -> np.ndarray:
    """``(ave_Q w)(ave_Q nu)^(p-1)`` on every cube of the family."""
    lo, hi = ap_cube_family(w.grid) if family is None else family
    vol = np.prod(hi - lo, axis=1)
    nu = dual_weight(w)
    return (w.measure(lo, hi) / vol) * (nu.measure(lo, hi) / vol) ** (w.p - 1)


def ap_characteristic(w: Weight, family=None) -> float:
    """``[w]_{A_p} = sup_Q (ave_Q w)(ave_Q nu)^(p-1)`` over the finite cube family.

    This is a lower bound for the supremum over all cubes.
    """
    return float(ap_profile(w, family).max())
