"""Adaptive integration of kernels over (half-space box) x (boundary box) pairs.

Two routes compute the same numbers ``∬_B ∫_Y k(t,x;y) dy dt dx``:

* ``"product"``: tensor Gauss-Legendre over the full product box ``B x Y``,
  splitting whichever factor is larger;
* ``"closed"``: the closed-form ``y``-integral of the kernel, with tensor
  Gauss over ``B`` alone.

Both refine by the ratio of the distance to the singular set ``{t = 0, x = y}``
over the box size, so near-diagonal pairs are subdivided dyadically while far
pairs get a few nodes.  Agreement of the two routes is the adjointness check.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product as iproduct

import numpy as np

from .errors import InputError

# (minimum distance/size ratio, Gauss order) from coarse to fine
RULES = {
    "product": ((24.0, 2), (8.0, 3), (3.0, 4)),
    "closed": ((32.0, 2), (12.0, 3), (6.0, 4), (3.0, 6)),
}
MAX_DEPTH = 40
CHUNK = 1 << 21


@lru_cache(maxsize=None)
def tensor_rule(m: int, dim: int):
    """Gauss-Legendre nodes on ``[0,1]^dim`` (shape ``(m^dim, dim)``) and weights."""
    u, w = np.polynomial.legendre.leggauss(m)
    u = (u + 1) / 2
    w = w / 2
    nodes = np.array(list(iproduct(u, repeat=dim)))
    wts = np.prod(np.array(list(iproduct(w, repeat=dim))), axis=1)
    return nodes, wts


@dataclass
class Pairs:
    """Work items: half-space boxes ``(t0, t1) x [xlo, xhi)`` paired with ``[ylo, yhi)``."""

    owner: np.ndarray
    t0: np.ndarray
    t1: np.ndarray
    xlo: np.ndarray
    xhi: np.ndarray
    ylo: np.ndarray
    yhi: np.ndarray

    def take(self, sel):
        return Pairs(*(getattr(self, f)[sel] for f in ("owner", "t0", "t1", "xlo", "xhi", "ylo", "yhi")))

    @staticmethod
    def concat(parts):
        return Pairs(*(np.concatenate([getattr(p, f) for p in parts]) for f in
                       ("owner", "t0", "t1", "xlo", "xhi", "ylo", "yhi")))

    def __len__(self):
        return len(self.owner)


@dataclass
class QuadStats:
    evaluations: int = 0
    items: int = 0
    capped: int = 0


def _split_intervals(lo, hi, bps):
    """Split 1-d intervals ``[lo, hi)`` at interior breakpoints; returns index map and new ends."""
    if len(bps) == 0:
        return np.arange(len(lo)), lo, hi
    idx, nlo, nhi = [], [], []
    for i, (a, b) in enumerate(zip(lo, hi)):
        inner = bps[(bps > a) & (bps < b)]
        cuts = np.concatenate([[a], inner, [b]])
        idx.extend([i] * (len(cuts) - 1))
        nlo.extend(cuts[:-1])
        nhi.extend(cuts[1:])
    return np.array(idx, dtype=np.int64), np.array(nlo), np.array(nhi)


def split_at_breakpoints(p: Pairs, bps: np.ndarray, which=("x", "y")) -> Pairs:
    if len(bps) == 0 or p.xlo.shape[1] != 1:
        return p
    for side in which:
        lo = getattr(p, side + "lo")[:, 0]
        hi = getattr(p, side + "hi")[:, 0]
        hit = np.any((bps[None, :] > lo[:, None]) & (bps[None, :] < hi[:, None]), axis=1)
        if not hit.any():
            continue
        keep = p.take(~hit)
        sub = p.take(hit)
        idx, nlo, nhi = _split_intervals(getattr(sub, side + "lo")[:, 0], getattr(sub, side + "hi")[:, 0], bps)
        sub = sub.take(idx)
        setattr(sub, side + "lo", nlo[:, None])
        setattr(sub, side + "hi", nhi[:, None])
        p = Pairs.concat([keep, sub])
    return p


def _geometry(p: Pairs):
    gap = np.maximum(0.0, np.maximum(p.xlo - p.yhi, p.ylo - p.xhi))
    dist = np.sqrt(p.t0 ** 2 + np.sum(gap ** 2, axis=1))
    bsize = np.maximum(p.t1 - p.t0, np.max(p.xhi - p.xlo, axis=1))
    ysize = np.max(p.yhi - p.ylo, axis=1)
    return dist, bsize, ysize


def _split_b(p: Pairs) -> Pairs:
    n = p.xlo.shape[1]
    parts = []
    tm = (p.t0 + p.t1) / 2
    xm = (p.xlo + p.xhi) / 2
    for bits in iproduct((0, 1), repeat=n + 1):
        t0 = np.where(bits[0], tm, p.t0)
        t1 = np.where(bits[0], p.t1, tm)
        b = np.array(bits[1:], bool)
        xlo = np.where(b, xm, p.xlo)
        xhi = np.where(b, p.xhi, xm)
        parts.append(Pairs(p.owner, t0, t1, xlo, xhi, p.ylo, p.yhi))
    return Pairs.concat(parts)


def _split_y(p: Pairs) -> Pairs:
    n = p.ylo.shape[1]
    parts = []
    ym = (p.ylo + p.yhi) / 2
    for bits in iproduct((0, 1), repeat=n):
        b = np.array(bits, bool)
        parts.append(Pairs(p.owner, p.t0, p.t1, p.xlo, p.xhi, np.where(b, ym, p.ylo), np.where(b, p.yhi, ym)))
    return Pairs.concat(parts)


def _eval_product(kernel, p: Pairs, m: int) -> np.ndarray:
    n = p.xlo.shape[1]
    nodes, wts = tensor_rule(m, 2 * n + 1)
    out = np.empty(len(p))
    step = max(1, CHUNK // len(wts))
    for s in range(0, len(p), step):
        q = p.take(slice(s, s + step))
        dt = (q.t1 - q.t0)[:, None]
        t = q.t0[:, None] + dt * nodes[None, :, 0]
        dx = q.xhi - q.xlo
        dy = q.yhi - q.ylo
        x = q.xlo[:, None, :] + dx[:, None, :] * nodes[None, :, 1:n + 1]
        y = q.ylo[:, None, :] + dy[:, None, :] * nodes[None, :, n + 1:]
        vol = dt[:, 0] * np.prod(dx, axis=1) * np.prod(dy, axis=1)
        out[s:s + step] = kernel.evaluate(t, x, y) @ wts * vol
    return out


def _eval_closed(kernel, p: Pairs, m: int) -> np.ndarray:
    n = p.xlo.shape[1]
    nodes, wts = tensor_rule(m, n + 1)
    out = np.empty(len(p))
    step = max(1, CHUNK // len(wts))
    for s in range(0, len(p), step):
        q = p.take(slice(s, s + step))
        dt = (q.t1 - q.t0)[:, None]
        t = q.t0[:, None] + dt * nodes[None, :, 0]
        dx = q.xhi - q.xlo
        x = q.xlo[:, None, :] + dx[:, None, :] * nodes[None, :, 1:]
        vals = kernel.y_integral(t, x, q.ylo[:, None, :], q.yhi[:, None, :])
        out[s:s + step] = vals @ wts * dt[:, 0] * np.prod(dx, axis=1)
    return out


def integrate_pairs(kernel, p: Pairs, route: str, size: int | None = None, stats: QuadStats | None = None):
    """Integral of ``k`` over each pair, summed by ``owner`` into an array of ``size``."""
    if route not in RULES:
        raise InputError(f"unknown quadrature route {route!r}")
    if route == "closed" and kernel.y_integral is None:
        # no closed form: the same tensor rule, but refining the boundary factor first
        route_eval, split_y_first = _eval_product, True
    else:
        route_eval = _eval_closed if route == "closed" else _eval_product
        split_y_first = False
    stats = stats if stats is not None else QuadStats()
    size = int(p.owner.max()) + 1 if size is None else size
    total = np.zeros(size)
    p = split_at_breakpoints(p, np.asarray(kernel.breakpoints, float),
                             ("x",) if route_eval is _eval_closed else ("x", "y"))
    rules = RULES[route]
    depth = 0
    while len(p):
        dist, bsize, ysize = _geometry(p)
        if route_eval is _eval_closed:
            size_ = bsize
        else:
            size_ = np.maximum(bsize, ysize)
        ratio = dist / size_
        done = np.zeros(len(p), bool)
        for thr, m in rules:
            sel = ~done & (ratio >= thr)
            if sel.any():
                q = p.take(sel)
                total += np.bincount(q.owner, weights=route_eval(kernel, q, m), minlength=size)
                stats.evaluations += int(sel.sum()) * m ** (q.xlo.shape[1] * (1 if route_eval is _eval_closed else 2) + 1)
                stats.items += int(sel.sum())
                done |= sel
        if depth >= MAX_DEPTH and not done.all():
            q = p.take(~done)
            total += np.bincount(q.owner, weights=route_eval(kernel, q, rules[-1][1]), minlength=size)
            stats.capped += len(q)
            break
        p = p.take(~done)
        if not len(p):
            break
        if route_eval is _eval_closed:
            p = _split_b(p)
        else:
            _, bsize, ysize = _geometry(p)
            many_b = bsize >= ysize if not split_y_first else bsize > ysize
            p = Pairs.concat([_split_b(p.take(many_b)), _split_y(p.take(~many_b))])
        depth += 1
    return total, stats


def box_pair_table(kernel, ylo, yhi, t0, t1, blo, bhi, route: str, dedup_key=None):
    """Dense table ``T[i, b] = ∬_{box b} ∫_{Y_i} k`` for leaves ``Y_i`` and boxes ``b``.

    ``dedup_key`` (an int array of shape ``(len(Y), len(boxes))``) marks pairs
    known to have identical integrals, such as translates for convolution kernels.
    """
    ny, nb = len(ylo), len(t0)
    stats = QuadStats()
    if dedup_key is not None:
        flat = dedup_key.reshape(-1)
        uniq, first, inv = np.unique(flat, return_index=True, return_inverse=True)
        yi, bi = np.divmod(first, nb)
    else:
        yi, bi = np.divmod(np.arange(ny * nb), nb)
    p = Pairs(np.arange(len(yi)), t0[bi], t1[bi], blo[bi], bhi[bi], ylo[yi], yhi[yi])
    vals, stats = integrate_pairs(kernel, p, route, len(yi), stats)
    if dedup_key is not None:
        vals = vals[inv]
    return vals.reshape(ny, nb), stats
