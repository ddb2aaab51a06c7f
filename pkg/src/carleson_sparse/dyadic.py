"""Finite dyadic geometry: cubes, the cube tree, Carleson boxes and sparse families.

Cubes live on the standard lattice: a cube of level ``j`` with integer corner
``c`` is ``prod_i [c_i 2^-j, (c_i + 1) 2^-j)``.  A :class:`DyadicGrid` holds every
cube of levels ``0..J`` inside an integer root box; cubes are addressed by a
global integer index (level-major, C-order inside a level) and leaves are the
level-``J`` cubes, addressed by their local index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

from .errors import BudgetError, DomainError, InputError

DEFAULT_LEAF_BUDGET = 1 << 16


@dataclass(frozen=True, order=True)
class DyadicCube:
    level: int
    corner: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.corner)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.corner, dtype=float) * self.side

    @property
    def measure(self) -> Fraction:
        return Fraction(2) ** (-self.level * self.n)

    def contains(self, other: "DyadicCube") -> bool:
        """True if ``other`` is a (non-strict) dyadic subcube of ``self``."""
        if other.level < self.level or other.n != self.n:
            return False
        shift = other.level - self.level
        return all((c >> shift) == s for c, s in zip(other.corner, self.corner))

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.level - 1, tuple(c >> 1 for c in self.corner))

    def children(self) -> list["DyadicCube"]:
        return [DyadicCube(self.level + 1, tuple(2 * c + b for c, b in zip(self.corner, bits)))
                for bits in product((0, 1), repeat=self.n)]

    def to_text(self) -> str:
        return " ".join(str(v) for v in (self.n, self.level, *self.corner))

    @classmethod
    def from_text(cls, line: str) -> "DyadicCube":
        parts = [int(v) for v in line.split()]
        if len(parts) < 3 or len(parts) != parts[0] + 2:
            raise InputError(f"malformed cube line {line!r}")
        return cls(parts[1], tuple(parts[2:]))


@dataclass(frozen=True)
class Box:
    """Half-space box ``(t_lo, t_hi) x prod base``."""

    t_lo: float
    t_hi: float
    base: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not (0 <= self.t_lo < self.t_hi):
            raise InputError(f"bad time interval ({self.t_lo}, {self.t_hi})")
        if any(not lo < hi for lo, hi in self.base):
            raise InputError(f"empty base {self.base}")

    @property
    def measure(self) -> float:
        return (self.t_hi - self.t_lo) * math.prod(hi - lo for lo, hi in self.base)


@dataclass(frozen=True)
class Geometry:
    carleson_box: Box
    whitney_region: Box
    dilate: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Relatives:
    parent: DyadicCube | None
    grandparent: DyadicCube | None
    children: tuple[DyadicCube, ...]
    siblings: tuple[DyadicCube, ...]

    @property
    def has_parent(self) -> bool:
        return self.parent is not None

    @property
    def has_grandparent(self) -> bool:
        return self.grandparent is not None


def _is_power_of_two(v: int) -> bool:
    return v > 0 and v & (v - 1) == 0


class DyadicGrid:
    """All dyadic cubes of levels ``0..J`` inside the integer box ``[lo, hi)``.

    ``offset`` translates every physical coordinate (the lattice itself stays
    integral); it defaults to zero.
    """

    def __init__(self, n: int, lo: Sequence[int], hi: Sequence[int], J: int,
                 offset: Sequence[float] | None = None, leaf_budget: int = DEFAULT_LEAF_BUDGET):
        if n not in (1, 2):
            raise InputError(f"dimension must be 1 or 2, got {n}")
        lo = tuple(int(v) for v in lo)
        hi = tuple(int(v) for v in hi)
        if len(lo) != n or len(hi) != n:
            raise InputError("root box does not match the dimension")
        for a, b in zip(lo, hi):
            if not _is_power_of_two(b - a):
                raise InputError(f"root side {b - a} is not a power of two")
        if J < 1:
            raise InputError(f"depth must be >= 1, got {J}")
        leaves = math.prod(b - a for a, b in zip(lo, hi)) * 2 ** (n * J)
        if leaves > leaf_budget:
            raise BudgetError(f"{leaves} leaf cells exceed the budget of {leaf_budget}")
        self.n, self.lo, self.hi, self.J = n, lo, hi, J
        self.offset = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
        self.key = (n, lo, hi, J, tuple(self.offset.tolist()))

        shapes, offsets = [], [0]
        for j in range(J + 1):
            shape = tuple((b - a) * 2 ** j for a, b in zip(lo, hi))
            shapes.append(shape)
            offsets.append(offsets[-1] + math.prod(shape))
        self.level_shape = shapes
        self.level_offset = np.array(offsets, dtype=np.int64)
        self.num_cubes = int(offsets[-1])
        self.leaf_shape = shapes[J]
        self.num_leaves = math.prod(shapes[J])

        levels = np.empty(self.num_cubes, dtype=np.int64)
        corners = np.empty((self.num_cubes, n), dtype=np.int64)
        for j in range(J + 1):
            a, b = offsets[j], offsets[j + 1]
            levels[a:b] = j
            grid_idx = np.indices(shapes[j]).reshape(n, -1).T
            corners[a:b] = grid_idx + np.array(lo) * 2 ** j
        self.levels = levels
        self.corners = corners
        self.sides = 2.0 ** (-levels.astype(float))
        self.lows = corners * self.sides[:, None] + self.offset

        parent = np.full(self.num_cubes, -1, dtype=np.int64)
        for j in range(1, J + 1):
            a, b = offsets[j], offsets[j + 1]
            parent[a:b] = self._index_array(j - 1, corners[a:b] >> 1)
        self.parent = parent
        self.children = np.full((self.num_cubes, 2 ** n), -1, dtype=np.int64)
        bits = np.array(list(product((0, 1), repeat=n)), dtype=np.int64)
        for j in range(J):
            a, b = offsets[j], offsets[j + 1]
            for k, bit in enumerate(bits):
                self.children[a:b, k] = self._index_array(j + 1, 2 * corners[a:b] + bit)

        # leaf_ancestors[i, j] = index of the level-j cube containing leaf i
        leaf_corners = corners[offsets[J]:offsets[J + 1]]
        anc = np.empty((self.num_leaves, J + 1), dtype=np.int64)
        for j in range(J + 1):
            anc[:, j] = self._index_array(j, leaf_corners >> (J - j))
        self.leaf_ancestors = anc
        # cube -> leaves in CSR form, leaves sorted
        cols = anc.T.reshape(-1)
        order = np.lexsort((np.tile(np.arange(self.num_leaves), J + 1), cols))
        self.cube_leaf_idx = np.tile(np.arange(self.num_leaves), J + 1)[order]
        counts = np.bincount(cols, minlength=self.num_cubes)
        self.cube_leaf_ptr = np.concatenate([[0], np.cumsum(counts)])
        self.leaf_counts = counts.astype(np.int64)  # |Q| in leaf units
        self.leaf_measure = 2.0 ** (-n * J)
        self.leaf_side = 2.0 ** (-J)
        self.leaf_centers = self.lows[offsets[J]:] + self.leaf_side / 2
        self.leaf_lows = self.lows[offsets[J]:]

    # -- indexing ---------------------------------------------------------
    def _index_array(self, j: int, corner: np.ndarray) -> np.ndarray:
        local = corner - np.array(self.lo) * 2 ** j
        return self.level_offset[j] + np.ravel_multi_index(tuple(local.T), self.level_shape[j])

    def index(self, cube: DyadicCube) -> int:
        if cube.n != self.n or not 0 <= cube.level <= self.J:
            raise DomainError(f"cube {cube} is not in the grid")
        local = [c - a * 2 ** cube.level for c, a in zip(cube.corner, self.lo)]
        if any(not 0 <= v < s for v, s in zip(local, self.level_shape[cube.level])):
            raise DomainError(f"cube {cube} is not in the grid")
        return int(self.level_offset[cube.level] + np.ravel_multi_index(tuple(local), self.level_shape[cube.level]))

    def cube(self, idx: int) -> DyadicCube:
        return DyadicCube(int(self.levels[idx]), tuple(int(c) for c in self.corners[idx]))

    def leaf_index(self, cube: DyadicCube) -> int:
        if cube.level != self.J:
            raise DomainError(f"{cube} is not a leaf")
        return self.index(cube) - int(self.level_offset[self.J])

    def leaves_of(self, idx: int) -> np.ndarray:
        return self.cube_leaf_idx[self.cube_leaf_ptr[idx]:self.cube_leaf_ptr[idx + 1]]

    def level_slice(self, j: int) -> slice:
        return slice(int(self.level_offset[j]), int(self.level_offset[j + 1]))

    @property
    def roots(self) -> np.ndarray:
        return np.arange(self.level_offset[1])

    def ancestors(self, idx: int, strict: bool = True) -> list[int]:
        out = [] if strict else [idx]
        p = self.parent[idx]
        while p >= 0:
            out.append(int(p))
            p = self.parent[p]
        return out

    def descendants(self, idx: int, strict: bool = False) -> np.ndarray:
        """Indices of all grid cubes contained in cube ``idx``."""
        out = [] if strict else [np.array([idx])]
        frontier = np.array([idx])
        while self.levels[frontier[0]] < self.J:
            frontier = self.children[frontier].reshape(-1)
            out.append(frontier)
        return np.concatenate(out) if out else np.array([], dtype=np.int64)

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Leaf index containing each point (``-1`` outside the grid)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = np.floor((pts - self.offset) / self.leaf_side).astype(np.int64) - np.array(self.lo) * 2 ** self.J
        inside = np.all((k >= 0) & (k < np.array(self.leaf_shape)), axis=1)
        out = np.full(len(pts), -1, dtype=np.int64)
        if inside.any():
            out[inside] = np.ravel_multi_index(tuple(k[inside].T), self.leaf_shape)
        return out

    @property
    def extent(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.lo, float) + self.offset, np.array(self.hi, float) + self.offset

    def __repr__(self):
        return f"DyadicGrid(n={self.n}, root={self.lo}..{self.hi}, J={self.J})"


def make_grid(n: int, root: Sequence | tuple, J: int, offset=None,
              leaf_budget: int = DEFAULT_LEAF_BUDGET) -> DyadicGrid:
    """Build the grid of all cubes of levels ``0..J`` in an integer root box.

    ``root`` is either ``(lo, hi)`` for ``n = 1`` or ``((lo_1, hi_1), ...)``.
    """
    if n == 1 and len(root) == 2 and np.isscalar(root[0]):
        bounds = [tuple(root)]
    else:
        bounds = [tuple(r) for r in root]
    if len(bounds) != n:
        raise InputError("root box does not match the dimension")
    for a, b in bounds:
        if int(a) != a or int(b) != b:
            raise InputError("root bounds must be integers")
    return DyadicGrid(n, [b[0] for b in bounds], [b[1] for b in bounds], J, offset, leaf_budget)


def relatives(cube: DyadicCube, grid: DyadicGrid) -> Relatives:
    idx = grid.index(cube)
    p = int(grid.parent[idx])
    parent = grid.cube(p) if p >= 0 else None
    gp = int(grid.parent[p]) if p >= 0 else -1
    grandparent = grid.cube(gp) if gp >= 0 else None
    kids = tuple(grid.cube(int(c)) for c in grid.children[idx]) if cube.level < grid.J else ()
    sibs = tuple(grid.cube(int(c)) for c in grid.children[p] if c != idx) if p >= 0 else ()
    return Relatives(parent, grandparent, kids, sibs)


def dilate_base(lo: np.ndarray, side: float, c: float) -> tuple[tuple[float, float], ...]:
    center = np.asarray(lo, float) + side / 2
    half = c * side / 2
    return tuple((float(m - half), float(m + half)) for m in center)


def geometry(cube: DyadicCube, c: float = 3.0, offset=None) -> Geometry:
    if c <= 0:
        raise InputError("dilation factor must be positive")
    lo = cube.lo + (0 if offset is None else np.asarray(offset, float))
    s = cube.side
    base = tuple((float(a), float(a + s)) for a in lo)
    return Geometry(Box(0.0, s, base), Box(s / 2, s, base), dilate_base(lo, s, c))


# -- sparse families ----------------------------------------------------------

@dataclass
class SparseFamily:
    """A family of grid cubes (global indices), optionally with witness sets.

    ``witness`` maps a member index to the array of leaf indices forming ``E_Q``.
    """

    members: list[int]
    eta: Fraction | float = Fraction(1, 2)
    witness: dict[int, np.ndarray] | None = None

    def cubes(self, grid: DyadicGrid) -> list[DyadicCube]:
        return [grid.cube(q) for q in self.members]


@dataclass
class SparseVerdict:
    sparse: bool
    witness: dict[int, np.ndarray] | None
    certificate: list[int] = field(default_factory=list)
    deficiency: int = 0

    def __bool__(self):
        return self.sparse


def _demand(count: int, eta: Fraction) -> int:
    return math.ceil(eta * count)


def check_witness(family: SparseFamily, eta, grid: DyadicGrid) -> bool:
    """Exact check of a witness: ``E_Q`` inside ``Q``, ``|E_Q| >= eta |Q|``, disjoint."""
    if family.witness is None:
        return False
    eta = Fraction(eta).limit_denominator(10 ** 9) if not isinstance(eta, Fraction) else eta
    seen = np.zeros(grid.num_leaves, dtype=bool)
    for q in family.members:
        cells = np.asarray(family.witness.get(q, []), dtype=np.int64)
        if len(np.unique(cells)) != len(cells):
            return False
        if not np.isin(cells, grid.leaves_of(q)).all():
            return False
        if Fraction(len(cells)) < eta * int(grid.leaf_counts[q]):
            return False
        if seen[cells].any():
            return False
        seen[cells] = True
    return True


def verify_sparse(family: SparseFamily, eta, grid: DyadicGrid) -> SparseVerdict:
    """Decide eta-sparseness exactly at leaf resolution by integer max-flow.

    Each member ``Q`` demands ``ceil(eta |Q|)`` whole leaf cells inside ``Q``; each
    leaf can be used once.  Feasible iff the max flow saturates all demands.
    When infeasible the certificate is a set of members whose total demand
    exceeds the number of leaves they cover (a Hall violation).
    """
    eta = Fraction(eta).limit_denominator(10 ** 9) if not isinstance(eta, Fraction) else eta
    if not 0 < eta <= 1:
        raise InputError(f"eta must lie in (0, 1], got {eta}")
    members = list(dict.fromkeys(int(q) for q in family.members))
    for q in members:
        if not 0 <= q < grid.num_cubes:
            raise DomainError(f"member {q} is not a cube of the grid")
    if not members:
        return SparseVerdict(True, {})
    demands = np.array([_demand(int(grid.leaf_counts[q]), eta) for q in members], dtype=np.int64)
    cell_lists = [grid.leaves_of(q) for q in members]
    used = np.unique(np.concatenate(cell_lists))
    cell_node = {int(c): i for i, c in enumerate(used)}
    m, k = len(members), len(used)
    src, sink = 0, m + k + 1
    rows, cols, caps = [], [], []
    for i, d in enumerate(demands):
        rows.append(src); cols.append(1 + i); caps.append(int(d))
    for i, cells in enumerate(cell_lists):
        nodes = 1 + m + np.searchsorted(used, cells)
        rows.extend([1 + i] * len(cells)); cols.extend(nodes.tolist()); caps.extend([1] * len(cells))
    for j in range(k):
        rows.append(1 + m + j); cols.append(sink); caps.append(1)
    size = m + k + 2
    cap = csr_matrix((np.array(caps, dtype=np.int32), (rows, cols)), shape=(size, size))
    res = maximum_flow(cap, src, sink)
    flow = res.flow.tocsr()
    total = int(demands.sum())
    if res.flow_value == total:
        witness = {}
        for i, q in enumerate(members):
            row = flow.getrow(1 + i)
            cells = row.indices[row.data > 0] - 1 - m
            witness[q] = np.sort(used[cells])
        return SparseVerdict(True, witness)

    # flow is antisymmetric, so cap - flow is the full residual network
    resid = (cap.astype(np.int64) - flow.astype(np.int64)).tocsr()
    resid.data = (resid.data > 0).astype(np.int8)
    resid.eliminate_zeros()
    reach = breadth_first_order(resid, src, directed=True, return_predecessors=False)
    seen = np.zeros(size, dtype=bool)
    seen[reach] = True
    cert = [members[i] for i in range(m) if seen[1 + i]]
    covered = np.unique(np.concatenate([grid.leaves_of(q) for q in cert])) if cert else np.array([])
    deficiency = int(sum(_demand(int(grid.leaf_counts[q]), eta) for q in cert) - len(covered))
    return SparseVerdict(False, None, cert, deficiency)


# -- text serialization -------------------------------------------------------

def dump_family(family: SparseFamily, grid: DyadicGrid) -> str:
    """Members as ``n j c1 .. cn`` lines; a witness follows as ``E i1 i2 ..`` (leaf indices)."""
    lines = [f"eta {Fraction(family.eta).limit_denominator(10 ** 9)}"]
    for q in family.members:
        lines.append(grid.cube(q).to_text())
        if family.witness is not None and q in family.witness:
            lines.append("E " + " ".join(str(int(c)) for c in family.witness[q]))
    return "\n".join(lines) + "\n"


def load_family(text: str, grid: DyadicGrid) -> SparseFamily:
    members: list[int] = []
    witness: dict[int, np.ndarray] = {}
    eta: Fraction = Fraction(1, 2)
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("eta"):
            eta = Fraction(line.split()[1])
        elif line.startswith("E"):
            if not members:
                raise InputError("witness line before any cube")
            witness[members[-1]] = np.array([int(v) for v in line.split()[1:]], dtype=np.int64)
        else:
            members.append(grid.index(DyadicCube.from_text(line)))
    return SparseFamily(members, eta, witness or None)


def cubes_from_text(lines: Iterable[str]) -> list[DyadicCube]:
    return [DyadicCube.from_text(l) for l in lines if l.strip()]
