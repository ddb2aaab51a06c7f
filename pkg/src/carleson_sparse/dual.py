"""Dual functions for the dyadic non-tangential maximal function.

For ``f`` constant on Whitney cells put ``a_Q = |f|`` on ``Q^w`` and
``b_Q = max`` of ``a`` over the strict ancestors (0 at a root).  The cubes of
``D_lam`` containing ``Q`` are exactly the ``lam`` in ``[b_Q, a_Q)``, so

    g_Q = nu(Q) (a_Q^(q-1) - b_Q^(q-1))_+ / (q - 1),

and ``g`` is the constant of that ``dt dnu`` mass on ``Q^w`` with the sign of ``f``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .fields import BoundaryField, HalfspaceField, lp_norm
from .functionals import carleson, dyadic_nontangential, maximal
from .weights import Weight


@dataclass(frozen=True)
class DualFunctionBuild:
    f: HalfspaceField
    nu: Weight
    q: float
    a: np.ndarray
    b: np.ndarray
    gQ: np.ndarray
    g: HalfspaceField
    pairing: float          # ∬ f g dt dnu
    norm_N: float           # ||N^D f||_{L_q(nu)}
    norm_Cg: float          # ||C^D_nu g||_{L_p(nu)}
    vanishing: bool

    @property
    def p(self) -> float:
        return self.q / (self.q - 1)

    @property
    def ratio(self) -> float:
        """``∬ f g / (||N^D f|| ||C^D_nu g||)``; 0 for the zero field."""
        den = self.norm_N * self.norm_Cg
        return self.pairing / den if den > 0 else 0.0

    @property
    def level_set_sum(self) -> float:
        """``sum nu(Q) (a^q - b^q)_+``, which equals ``||N^D f||^q``."""
        nuQ = self.nu.cube_measures
        return float(np.sum(nuQ * np.maximum(self.a ** self.q - self.b ** self.q, 0.0)))


def strict_ancestor_max(grid, a: np.ndarray) -> np.ndarray:
    b = np.zeros(grid.num_cubes)
    for j in range(1, grid.J + 1):
        sl = grid.level_slice(j)
        par = grid.parent[sl]
        b[sl] = np.maximum(b[par], a[par])
    return b


def construct_dual_function(f: HalfspaceField, nu: Weight, q: float) -> DualFunctionBuild:
    if not q > 1:
        raise InputError("q must exceed 1")
    g = f.grid
    a = np.abs(f.values)
    b = strict_ancestor_max(g, a)
    nuQ = nu.cube_measures
    gQ = nuQ * np.maximum(a ** (q - 1) - b ** (q - 1), 0.0) / (q - 1)
    gQ = np.where(a > b, gQ, 0.0)
    height = g.sides / 2
    gv = np.sign(f.values) * gQ / (height * nuQ)
    gfield = HalfspaceField(g, gv)
    pairing = float(np.sum(f.values * gv * height * nuQ))
    p = q / (q - 1)
    wq = nu.with_p(q) if nu.p != q else nu
    norm_N = lp_norm(dyadic_nontangential(f).field, q, wq)
    norm_Cg = lp_norm(carleson(gfield, "dyadic_weighted", wq).field, p, wq)
    return DualFunctionBuild(f, wq, float(q), a, b, gQ, gfield, pairing, norm_N, norm_Cg,
                             vanishing=not np.any(gv))


def maximal_bound_side(build: DualFunctionBuild) -> np.ndarray:
    """Pointwise majorant ``M^D_nu((N^D f)^(q-1)) / (q - 1)`` of ``C^D_nu g``."""
    nd = dyadic_nontangential(build.f).field
    h = BoundaryField(nd.grid, nd.values ** (build.q - 1))
    return maximal(h, "dyadic_weighted", build.nu).values / (build.q - 1)
