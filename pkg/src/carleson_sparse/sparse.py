"""Sparse family construction by stopping cubes, and the domination check.

At a node ``Q`` (the field localized to ``3Q-hat``) the exceptional set is

    E = {y in Q : max(|S f_Q(y)|, M_S f_Q(y)) > c |Q|^-1 ∬_{3Q-hat} |f|},

the stopping cubes ``R_j`` are the maximal strict subcubes with
``|R ∩ E| > |R| / (2^n + 1)``, and ``E_Q = Q minus the R_j``.  One constant
``c`` serves every node; it is doubled until every node keeps
``sum |R_j| <= (1 - eta) |Q|`` and no node qualifies as its own stopping cube.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dyadic import SparseFamily, SparseVerdict, verify_sparse
from .errors import CalibrationError, DomainError, InputError
from .fields import HalfspaceField
from .kernels import Kernel
from .operators import Operator, operator

C_CAP = 2.0 ** 40


@dataclass(frozen=True)
class Stopping:
    cubes: tuple[int, ...]
    parent_bound: bool      # |R ∩ E| <= 2^n |R| / (2^n + 1) for every R
    evendiv: bool           # min(|R ∩ E|, |R \ E|) >= |R| / (2^n + 1) for every R
    covered: int            # sum |R_j| in leaf units


@dataclass(frozen=True)
class NodeLog:
    cube: int
    density: Fraction       # |E ∩ Q| / |Q|
    stopping: int
    covered: Fraction       # sum |R_j| / |Q|
    c: float

    def line(self, grid) -> str:
        return (f"{grid.cube(self.cube).to_text()} {float(self.density):.6g} {self.stopping} "
                f"{float(self.covered):.6g} {self.c:g}")


@dataclass
class SparseBuild:
    family: SparseFamily
    eta: Fraction
    c: float
    selection_fraction: Fraction
    top: tuple[int, ...]
    q1: int
    log: list = field(default_factory=list)
    attempts: list = field(default_factory=list)
    smallbads_ok: bool = True
    evendiv_ok: bool = True
    uncovered_leaves: int = 0

    def verify(self, grid) -> SparseVerdict:
        return verify_sparse(self.family, self.eta, grid)


# -- building blocks --------------------------------------------------------------

def support_cube(f: HalfspaceField) -> int:
    """Smallest grid cube ``Q_1`` with ``supp f`` inside ``Q_1-hat`` (-1 for the zero field)."""
    g = f.grid
    nz = np.nonzero(f.values)[0]
    if len(nz) == 0:
        return -1
    for j in range(g.J, -1, -1):
        anc = set()
        for r in nz:
            if g.levels[r] < j:
                anc = None
                break
            a = r
            while g.levels[a] > j:
                a = int(g.parent[a])
            anc.add(a)
        if anc is not None and len(anc) == 1:
            return anc.pop()
    raise DomainError("support of the field is not inside a single root Carleson box")


def top_cover(grid, q1: int) -> tuple[int, ...]:
    """``Q_1`` with the siblings of ``Q_1`` and of each of its ancestors below the root."""
    if q1 < 0:
        return tuple(int(r) for r in grid.roots)
    cover = [q1]
    a = q1
    while grid.parent[a] >= 0:
        p = int(grid.parent[a])
        cover.extend(int(c) for c in grid.children[p] if c != a)
        a = p
    return tuple(sorted(cover))


def _check_supported(op: Operator, f: HalfspaceField, q: int):
    g = op.grid
    nz = np.nonzero(f.values)[0]
    if len(nz) == 0:
        return
    s = g.sides[q]
    lo = g.lows[q] - s
    hi = g.lows[q] + 2 * s
    ok = (g.sides[nz] <= 3 * s) & np.all((g.lows[nz] >= lo - 1e-15) & (g.lows[nz] + g.sides[nz, None] <= hi + 1e-15), axis=1)
    if not ok.all():
        raise DomainError("field is not supported in 3Q-hat")


def exceptional_set(k: Kernel, f: HalfspaceField, Q, c: float) -> np.ndarray:
    """Leaves ``y`` of ``Q`` with ``max(|Sf|, M_S f)(y) > c |Q|^-1 ∬_{3Q-hat}|f|``; ``supp f`` must lie in ``3Q-hat``."""
    g = f.grid
    q = Q if isinstance(Q, (int, np.integer)) else g.index(Q)
    op = operator(k, g)
    _check_supported(op, f, q)
    mass = op.local_mass(f)[q]
    if mass == 0:
        return np.empty(0, dtype=np.int64)
    thr = c * mass / g.sides[q] ** g.n
    leaves = g.leaves_of(q)
    val = np.maximum(np.abs(op.S(f)), op.grand_maximal(f))[leaves]
    return leaves[val > thr]


def select_stopping_cubes(grid, in_E: np.ndarray, q: int, allow_self: bool = False) -> Stopping:
    """Maximal strict subcubes ``R`` of ``Q`` with ``|R ∩ E| > |R| / (2^n + 1)``.

    ``in_E`` is a boolean leaf mask.  Raises :class:`CalibrationError` when ``Q``
    itself satisfies the density condition (unless ``allow_self``).
    """
    n = grid.n
    den = 2 ** n + 1
    leaves = grid.leaves_of(q)
    cnt_q = int(in_E[leaves].sum())
    size_q = int(grid.leaf_counts[q])
    if cnt_q * den > size_q and not allow_self:
        raise CalibrationError(f"{grid.cube(q).to_text()} satisfies the stopping condition itself")
    jq = int(grid.levels[q])
    chosen = []
    if jq < grid.J:
        anc = grid.leaf_ancestors[leaves][:, jq + 1:]
        # counts of E per descendant cube, level by level
        e = in_E[leaves].astype(np.int64)
        hit_above = np.zeros(len(leaves), bool)
        for col in range(anc.shape[1]):
            cubes = anc[:, col]
            uniq, inv = np.unique(cubes, return_inverse=True)
            counts = np.bincount(inv, weights=e).astype(np.int64)
            qual = counts * den > grid.leaf_counts[uniq]
            qual_leaf = qual[inv] & ~hit_above
            chosen.extend(int(c) for c in np.unique(cubes[qual_leaf]))
            hit_above |= qual[inv]
    pb, ed, cov = True, True, 0
    for r in chosen:
        lr = grid.leaves_of(r)
        ce = int(in_E[lr].sum())
        sz = int(grid.leaf_counts[r])
        pb &= ce * den <= 2 ** n * sz
        ed &= min(ce, sz - ce) * den >= sz
        cov += sz
    return Stopping(tuple(sorted(chosen)), bool(pb), bool(ed), cov)


def _node_exceptional(op: Operator, U: np.ndarray, mass: np.ndarray, q: int, c: float) -> np.ndarray:
    """Boolean leaf mask of ``E`` at node ``Q`` (only leaves of ``Q`` can be set)."""
    g = op.grid
    leaves = g.leaves_of(q)
    mask = np.zeros(g.num_leaves, bool)
    if mass[q] == 0:
        return mask
    thr = c * mass[q] / g.sides[q] ** g.n
    sq = U[q, leaves]
    jq = int(g.levels[q])
    ms = np.zeros(len(leaves))
    if jq < g.J:
        anc = g.leaf_ancestors[leaves][:, jq + 1:]
        diff = np.abs(sq[:, None] - U[anc, leaves[:, None]])
        # m_Q(R) = max over leaves of R; M_S f_Q(y) = max over R with y in R strictly inside Q
        flat = anc.ravel()
        uniq, inv = np.unique(flat, return_inverse=True)
        mR = np.full(len(uniq), 0.0)
        np.maximum.at(mR, inv, diff.ravel())
        ms = mR[inv].reshape(anc.shape).max(axis=1)
    mask[leaves] = np.maximum(np.abs(sq), ms) > thr
    return mask


def build_sparse_family(k: Kernel, f: HalfspaceField, eta=Fraction(1, 2), c0: float | None = None) -> SparseBuild:
    g = f.grid
    eta = Fraction(eta).limit_denominator(1 << 20) if not isinstance(eta, Fraction) else eta
    if not 0 < eta < 1:
        raise InputError("eta must lie in (0, 1)")
    op = operator(k, g)
    q1 = support_cube(f)
    top = top_cover(g, q1)
    c = float(2 ** g.n + 2) if c0 is None else float(c0)
    frac = Fraction(1, 2 ** g.n + 1)
    if q1 < 0:
        fam = SparseFamily(list(top), eta, {int(q): g.leaves_of(q) for q in top})
        return SparseBuild(fam, eta, c, frac, top, q1)
    U = op.local_S(f)
    mass = op.local_mass(f)
    attempts = []
    while True:
        try:
            members, witness, log = _recurse(op, U, mass, top, c, eta)
            break
        except CalibrationError as exc:
            attempts.append((c, str(exc)))
            c *= 2
            if c > C_CAP:
                raise CalibrationError(f"c exceeded {C_CAP:g}; last failure: {exc}") from exc
    covered = np.zeros(g.num_leaves, bool)
    for q in top:
        covered[g.leaves_of(q)] = True
    fam = SparseFamily(members, eta, witness)
    b = SparseBuild(fam, eta, c, frac, top, q1, log, attempts)
    b.uncovered_leaves = int((~covered).sum())
    return b


def _recurse(op: Operator, U, mass, top, c, eta):
    g = op.grid
    members, witness, log = [], {}, []
    stack = list(top)
    while stack:
        q = stack.pop()
        in_E = _node_exceptional(op, U, mass, q, c)
        leaf_node = g.levels[q] == g.J
        st = select_stopping_cubes(g, in_E, q, allow_self=leaf_node)
        size = int(g.leaf_counts[q])
        if Fraction(st.covered, size) > 1 - eta:
            raise CalibrationError(f"{g.cube(q).to_text()}: stopping cubes cover {st.covered}/{size} of the cube")
        if not (st.parent_bound and st.evendiv):
            raise CalibrationError(f"{g.cube(q).to_text()}: stopping-cube certificate failed")
        members.append(q)
        keep = np.ones(g.num_leaves, bool)
        for r in st.cubes:
            keep[g.leaves_of(r)] = False
        leaves = g.leaves_of(q)
        witness[q] = leaves[keep[leaves]]
        log.append(NodeLog(q, Fraction(int(in_E[leaves].sum()), size), len(st.cubes), Fraction(st.covered, size), c))
        stack.extend(st.cubes)
    return members, witness, log


@dataclass(frozen=True)
class Domination:
    constant: float
    worst: int
    violations: int
    ratio: np.ndarray


def sparse_sum(f: HalfspaceField, members, k: Kernel) -> np.ndarray:
    """``sum_{Q in family, Q ∋ y} |Q|^-1 ∬_{3Q-hat}|f|`` on every leaf."""
    g = f.grid
    op = operator(k, g)
    avg = op.local_mass(f) / g.sides ** g.n
    out = np.zeros(g.num_leaves)
    for q in members:
        out[g.leaves_of(q)] += avg[q]
    return out


def check_sparse_domination(k: Kernel, f: HalfspaceField, build: SparseBuild) -> Domination:
    g = f.grid
    Sf = np.abs(operator(k, g).S(f))
    ssum = sparse_sum(f, build.family.members, k)
    covered = np.zeros(g.num_leaves, bool)
    for q in build.top:
        covered[g.leaves_of(q)] = True
    scale = max(float(Sf.max(initial=0.0)), 1e-300)
    tiny = Sf <= 1e-14 * scale
    viol = covered & (ssum == 0) & ~tiny
    ratio = np.where(covered & (ssum > 0), Sf / np.where(ssum > 0, ssum, 1.0), 0.0)
    worst = int(np.argmax(ratio)) if len(ratio) else -1
    return Domination(float(ratio.max(initial=0.0)), worst, int(viol.sum()), ratio)
