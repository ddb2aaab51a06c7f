"""Synthesis operator ``S``, its adjoint family ``S* = Θ_t``, and the grand
maximal truncation ``M_S``.

Both operators act on cell averages.  With the interaction table
``T[Y, W] = ∬_W ∫_Y k(t,x;y) dy dt dx``,

    S f(Y)  = |Y|^-1 sum_W T[Y, W] f_W,
    S* g(W) = |W|^-1 sum_Y T[Y, W] g_Y,

so ``<S f, g> = <f, S* g>`` holds exactly for the exact table.  ``S`` uses the
table from the product quadrature route and ``S*`` the one from the
closed-form route, so their pairing compares two independent computations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .dyadic import DyadicGrid
from .errors import DomainError, InputError
from .fields import BoundaryField, HalfspaceField, whitney_measures
from .kernels import Kernel
from .quadrature import box_pair_table


def _cached(grid: DyadicGrid, name: str, build):
    store = grid.__dict__.setdefault("_derived", {})
    if name not in store:
        store[name] = build(grid)
    return store[name]


def neighbors(grid: DyadicGrid) -> np.ndarray:
    """``(num_cubes, 3^n)`` indices of the same-level cubes meeting ``3Q`` (``-1`` outside)."""
    return _cached(grid, "neighbors", _neighbors)


def _neighbors(grid: DyadicGrid) -> np.ndarray:
    n = grid.n
    offs = np.array(list(np.ndindex(*([3] * n)))) - 1
    out = np.full((grid.num_cubes, len(offs)), -1, dtype=np.int64)
    for j in range(grid.J + 1):
        sl = grid.level_slice(j)
        corners = grid.corners[sl]
        shape = np.array(grid.level_shape[j])
        base = np.array(grid.lo) * 2 ** j
        stride = np.array([int(np.prod(shape[i + 1:])) for i in range(n)])
        for k, e in enumerate(offs):
            loc = corners + e - base
            ok = np.all((loc >= 0) & (loc < shape), axis=1)
            out[sl.start:sl.stop, k][ok] = sl.start + loc[ok] @ stride
    return out


def descendant_matrix(grid: DyadicGrid) -> sparse.csr_matrix:
    """``D[P, R] = 1`` when ``R ⊆ P``."""
    return _cached(grid, "descendants", _descendant_matrix)


def _descendant_matrix(grid: DyadicGrid) -> sparse.csr_matrix:
    rows, cols = [], []
    for r in range(grid.num_cubes):
        p = r
        while p >= 0:
            rows.append(p)
            cols.append(r)
            p = int(grid.parent[p])
    return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(grid.num_cubes,) * 2)


def piece_boxes(grid: DyadicGrid, kind: str):
    """``(t0, t1, lo, hi)`` of a family of boxes indexed by cube.

    ``"W"``: Whitney cells ``(l/2, l) x P``; ``"A"``: ``(l, 2l) x P``, the part of the
    parent's Whitney cell above ``P``; ``"B"``: ``(2l, 3l) x P``, the part of the
    grandparent's cell above ``P`` that lies in a dilated box ``3Q-hat``.
    """
    s = grid.sides
    lo = grid.lows
    hi = lo + s[:, None]
    if kind == "W":
        return s / 2, s, lo, hi
    if kind == "A":
        return s, 2 * s, lo, hi
    if kind == "B":
        return 2 * s, 3 * s, lo, hi
    raise InputError(f"unknown piece family {kind!r}")


def _translation_key(grid: DyadicGrid) -> np.ndarray:
    """Integer key equal for (leaf, cube) pairs that are translates of each other."""
    J = grid.J
    leafc = grid.corners[grid.level_offset[J]:]
    scale = (2 ** (J - grid.levels))[:, None]
    cubec = grid.corners * scale
    side_cells = np.array(grid.leaf_shape)
    span = 2 * side_cells + 1
    rel = cubec[None, :, :] - leafc[:, None, :] + side_cells
    key = grid.levels[None, :].astype(np.int64)
    for i in range(grid.n):
        key = key * span[i] + rel[..., i]
    return key


@dataclass
class Operator:
    kernel: Kernel
    grid: DyadicGrid
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kernel.n != self.grid.n:
            raise DomainError(f"kernel dimension {self.kernel.n} does not match grid dimension {self.grid.n}")
        self._tables = {}

    def table(self, kind: str = "W", route: str = "product") -> np.ndarray:
        """``T[Y, P] = ∬_{piece P} ∫_Y k`` for every leaf ``Y`` and cube ``P``."""
        key = (kind, route)
        if key not in self._tables:
            g = self.grid
            ylo = g.leaf_lows
            yhi = ylo + g.leaf_side
            t0, t1, lo, hi = piece_boxes(g, kind)
            dk = _translation_key(g) if self.kernel.convolution else None
            T, st = box_pair_table(self.kernel, ylo, yhi, t0, t1, lo, hi, route, dk)
            self._tables[key] = T
            self.stats[key] = st
        return self._tables[key]

    @property
    def capped(self) -> int:
        return sum(st.capped for st in self.stats.values())

    # -- operators ----------------------------------------------------------
    def S(self, f: HalfspaceField) -> np.ndarray:
        self._check(f)
        return self.table("W", "product") @ f.values / self.grid.leaf_measure

    def Sstar(self, g: BoundaryField) -> np.ndarray:
        self._check(g)
        return self.table("W", "closed").T @ g.values / whitney_measures(self.grid)

    def _check(self, f):
        if f.grid is not self.grid and f.grid.key != self.grid.key:
            raise DomainError("field lives on a different grid")

    # -- truncations ----------------------------------------------------------
    @cached_property
    def neighbors(self) -> np.ndarray:
        return neighbors(self.grid)

    @cached_property
    def descendants(self) -> sparse.csr_matrix:
        return descendant_matrix(self.grid)

    def _upper(self, v: np.ndarray, k: int) -> np.ndarray:
        """Value of the level-``k`` ancestor (zero where it is outside the grid)."""
        idx = np.arange(self.grid.num_cubes)
        for _ in range(k):
            idx = np.where(idx >= 0, self.grid.parent[np.maximum(idx, 0)], -1)
        return np.where(idx >= 0, v[np.maximum(idx, 0)], 0.0)

    def _stack_sum(self, P_vals: np.ndarray) -> np.ndarray:
        """Sum over the 3^n same-level neighbors; ``P_vals`` has cubes on axis 0."""
        nb = self.neighbors
        out = np.zeros_like(P_vals)
        for k in range(nb.shape[1]):
            ok = nb[:, k] >= 0
            out[ok] += P_vals[nb[ok, k]]
        return out

    def local_S(self, f: HalfspaceField) -> np.ndarray:
        """``U[Q, Y] = S(1_{3Q-hat} f)(Y)`` for every cube ``Q`` and leaf ``Y``."""
        self._check(f)
        fv = f.values
        TW = self.table("W", "product")
        V = (self.descendants @ (TW * fv[None, :]).T)
        if np.any(fv != 0) and self.grid.J >= 1:
            fp = self._upper(fv, 1)
            fgp = self._upper(fv, 2)
            V = V + (self.table("A", "product") * fp[None, :]).T
            if np.any(fgp != 0):
                V = V + (self.table("B", "product") * fgp[None, :]).T
        return self._stack_sum(np.asarray(V)) / self.grid.leaf_measure

    def local_mass(self, f: HalfspaceField) -> np.ndarray:
        """``∬_{3Q-hat} |f|`` for every cube ``Q`` (represented part)."""
        g = self.grid
        a = np.abs(f.values)
        own = self.descendants @ (a * whitney_measures(g))
        piece = g.sides ** (g.n + 1)
        own = own + piece * self._upper(a, 1) + piece * self._upper(a, 2)
        return self._stack_sum(own)

    def grand_maximal(self, f: HalfspaceField) -> np.ndarray:
        """``M_S f(Y) = max_{Q ∋ Y} max_{Y' ⊂ Q} |S(1_{outside 3Q-hat} f)(Y')|``."""
        g = self.grid
        Sf = self.S(f)
        U = self.local_S(f)
        R = np.abs(Sf[None, :] - U)
        # per-cube max over the cube's own leaves
        vals = R[np.repeat(np.arange(g.num_cubes), g.leaf_counts), g.cube_leaf_idx]
        mQ = np.maximum.reduceat(vals, g.cube_leaf_ptr[:-1])
        return mQ[g.leaf_ancestors].max(axis=1)


_CACHE: dict = {}


def operator(k: Kernel, grid: DyadicGrid) -> Operator:
    """Shared operator per (kernel, grid); tables are built lazily and reused."""
    key = (id(k), grid.key)
    hit = _CACHE.get(key)
    if hit is None or hit.kernel is not k:
        hit = Operator(k, grid)
        _CACHE[key] = hit
    return hit


def apply_S(k: Kernel, f: HalfspaceField, grid: DyadicGrid | None = None) -> BoundaryField:
    if grid is not None and grid.key != f.grid.key:
        raise DomainError("output grid must be the grid of the half-space field")
    return BoundaryField(f.grid, operator(k, f.grid).S(f))


def apply_Sstar(k: Kernel, f: BoundaryField, sample: str = "average") -> HalfspaceField:
    """``Θ_t f`` on Whitney cells: cell averages (default) or values at cell centers."""
    if sample == "average":
        return HalfspaceField(f.grid, operator(k, f.grid).Sstar(f))
    if sample == "center":
        g = f.grid
        t = 0.75 * g.sides
        x = g.lows + g.sides[:, None] / 2
        return HalfspaceField(g, theta(k, f, t, x))
    raise InputError("sample must be 'average' or 'center'")


def theta(k: Kernel, f: BoundaryField, t, x) -> np.ndarray:
    """Point values ``Θ_t f(x) = ∫ k(t,x;y) f(y) dy`` from the closed-form cell integrals."""
    if k.y_integral is None:
        raise InputError("point evaluation needs a kernel with a closed-form y-integral")
    g = f.grid
    t = np.atleast_1d(np.asarray(t, float))
    x = np.asarray(x, float).reshape(len(t), g.n)
    out = np.zeros(len(t))
    lo = g.leaf_lows
    hi = lo + g.leaf_side
    step = max(1, (1 << 22) // g.num_leaves)
    for s in range(0, len(t), step):
        ts = t[s:s + step, None]
        xs = x[s:s + step, None, :]
        out[s:s + step] = k.y_integral(ts, xs, lo[None], hi[None]) @ f.values
    return out


def grand_maximal_truncation(k: Kernel, f: HalfspaceField) -> BoundaryField:
    return BoundaryField(f.grid, operator(k, f.grid).grand_maximal(f))


def grand_maximal_bruteforce(k: Kernel, f: HalfspaceField) -> np.ndarray:
    """Reference ``M_S``: integrate ``k`` over each ``W ∩ 3Q-hat`` box directly."""
    from .dyadic import dilate_base
    from .quadrature import Pairs, integrate_pairs
    g = f.grid
    Sf = operator(k, g).S(f)
    nz = np.nonzero(f.values)[0]
    ylo = g.leaf_lows
    yhi = ylo + g.leaf_side
    out = np.zeros(g.num_leaves)
    for q in range(g.num_cubes):
        s = g.sides[q]
        base = np.array(dilate_base(g.lows[q], s, 3.0))
        t0 = np.maximum(g.sides[nz] / 2, 0.0)
        t1 = np.minimum(g.sides[nz], 3 * s)
        lo = np.maximum(g.lows[nz], base[:, 0])
        hi = np.minimum(g.lows[nz] + g.sides[nz, None], base[:, 1])
        ok = (t1 > t0) & np.all(hi > lo, axis=1)
        inside = np.zeros(g.num_leaves)
        if ok.any():
            cells = np.nonzero(ok)[0]
            leaves = g.leaves_of(q)
            yi, ci = np.meshgrid(leaves, cells, indexing="ij")
            yi, ci = yi.ravel(), ci.ravel()
            P = Pairs(np.arange(len(yi)), t0[ci], t1[ci], lo[ci], hi[ci], ylo[yi], yhi[yi])
            vals, _ = integrate_pairs(k, P, "closed", len(yi))
            inside = np.zeros(g.num_leaves)
            np.add.at(inside, yi, vals * f.values[nz][ci])
        leaves = g.leaves_of(q)
        m = np.abs(Sf[leaves] - inside[leaves] / g.leaf_measure).max()
        out[leaves] = np.maximum(out[leaves], m)
    return out
