"""Calderón-Zygmund decomposition with Carleson averages, and the Whitney mean-zero split."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError
from .fields import HalfspaceField, whitney_measures
from .operators import descendant_matrix


@dataclass(frozen=True)
class CZDecomposition:
    lam: float
    cubes: tuple[int, ...]
    labels: np.ndarray          # cube index of the selected box containing each cell, -1 if none
    means: dict
    good: HalfspaceField
    bad: HalfspaceField         # sum of all bad parts
    truncation_limited: bool

    def bad_part(self, j: int) -> HalfspaceField:
        q = self.cubes[j]
        return HalfspaceField(self.good.grid, np.where(self.labels == q, self.bad.values, 0.0))

    def bad_parts(self) -> list[HalfspaceField]:
        return [self.bad_part(j) for j in range(len(self.cubes))]

    def exact_means(self, f: HalfspaceField) -> dict:
        """Means over the selected boxes in rational arithmetic."""
        g = f.grid
        meas = [Fraction(float(m)) for m in whitney_measures(g)]
        out = {}
        for q in self.cubes:
            cells = np.nonzero(self.labels == q)[0]
            num = sum((Fraction(float(f.values[c])) * meas[c] for c in cells), Fraction(0))
            den = sum((meas[c] for c in cells), Fraction(0))
            out[q] = num / den
        return out

    def exact_bad_integrals(self, f: HalfspaceField) -> dict:
        """``∬_{Q_j-hat} b_j`` with ``b_j = f - mean_j`` in rational arithmetic (zero by construction)."""
        g = f.grid
        meas = [Fraction(float(m)) for m in whitney_measures(g)]
        means = self.exact_means(f)
        out = {}
        for q in self.cubes:
            cells = np.nonzero(self.labels == q)[0]
            out[q] = sum(((Fraction(float(f.values[c])) - means[q]) * meas[c] for c in cells), Fraction(0))
        return out


def carleson_masses(f: HalfspaceField) -> np.ndarray:
    """``∬_{Q-hat} |f|`` for every grid cube (represented cells)."""
    return descendant_matrix(f.grid) @ (np.abs(f.values) * whitney_measures(f.grid))


def cz_decompose(f: HalfspaceField, lam: float) -> CZDecomposition:
    """Maximal dyadic ``Q_j`` with ``∬_{Q_j-hat}|f| > lam |Q_j|``; ``b_j = (f - mean) 1_{Q_j-hat}``.

    The mean is taken over the represented part of ``Q_j-hat`` so each ``b_j``
    integrates to zero on the grid.
    """
    if not lam > 0:
        raise InputError("threshold must be positive")
    g = f.grid
    mass = carleson_masses(f)
    vol = g.sides ** g.n
    qual = mass > lam * vol
    # maximal: no qualifying strict ancestor
    anc_qual = np.zeros(g.num_cubes, bool)
    for j in range(1, g.J + 1):
        sl = g.level_slice(j)
        par = g.parent[sl]
        anc_qual[sl] = anc_qual[par] | qual[par]
    selected = np.nonzero(qual & ~anc_qual)[0]
    labels = np.full(g.num_cubes, -1, dtype=np.int64)
    meas = whitney_measures(g)
    means = {}
    good = f.values.copy()
    D = descendant_matrix(g)
    for q in selected:
        cells = D.indices[D.indptr[q]:D.indptr[q + 1]]
        labels[cells] = q
        m = float(np.dot(f.values[cells], meas[cells]) / meas[cells].sum())
        means[int(q)] = m
        good[cells] = m
    bad = f.values - good
    limited = bool(np.any(qual[g.roots]))
    return CZDecomposition(float(lam), tuple(int(q) for q in selected), labels, means,
                           HalfspaceField(g, good), HalfspaceField(g, bad), limited)


def whitney_split(sub: np.ndarray, grid=None):
    """Split subcell samples (one row of equal-measure subcells per Whitney cell)
    into a per-cell mean-zero part ``f0`` and the per-cell average ``f1``."""
    sub = np.asarray(sub, float)
    if sub.ndim == 1:
        sub = sub[:, None]
    f1 = sub.mean(axis=1)
    f0 = sub - f1[:, None]
    if grid is not None:
        if len(f1) != grid.num_cubes:
            raise InputError("one row of subcell values per Whitney cell is required")
        return f0, HalfspaceField(grid, f1)
    return f0, f1


def subcell_samples(grid, sampler) -> np.ndarray:
    """Values of ``sampler(t, x)`` at the centers of the ``2^(n+1)`` halves of each Whitney cell."""
    n = grid.n
    s = grid.sides
    cols = []
    for bits in np.ndindex(*([2] * (n + 1))):
        b = np.array(bits, float)
        t = s / 2 + s / 4 * (b[0] + 0.5)
        x = grid.lows + s[:, None] / 2 * (b[1:][None, :] + 0.5)
        cols.append(np.asarray(sampler(t, x), float).reshape(-1))
    return np.stack(cols, axis=1)
