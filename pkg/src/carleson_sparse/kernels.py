"""Half-space kernels ``k(t, x; y)`` and their off-diagonal regularity.

Every evaluator is vectorized: ``t`` has shape ``S`` and ``x``, ``y`` have shape
``S + (n,)``.  Built-in kernels also carry the closed-form integral of
``y -> k(t, x; y)`` over an axis-aligned box, which gives the second, independent
quadrature route for the operators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import gamma

from .errors import DomainError, InputError


@dataclass(frozen=True, eq=False)
class Kernel:
    name: str
    n: int
    delta: float
    evaluate: Callable
    y_integral: Optional[Callable] = None
    convolution: bool = False
    breakpoints: np.ndarray = field(default_factory=lambda: np.empty(0))
    singular_set: str = "t = 0, x = y"

    def __call__(self, t, x, y):
        t = np.asarray(t, float)
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if x.shape[-1] != self.n or y.shape[-1] != self.n:
            raise DomainError(f"{self.name} is a kernel on R^{self.n}")
        return self.evaluate(t, x, y)


def poisson_constant(n: int) -> float:
    """``c_n`` with ``∫ c_n t (t^2+|x|^2)^(-(n+1)/2) dx = 1``."""
    return gamma((n + 1) / 2) / math.pi ** ((n + 1) / 2)


# -- Poisson and Riesz ----------------------------------------------------------

def _sq(t, x, y):
    s = t * t
    for i in range(x.shape[-1]):
        d = x[..., i] - y[..., i]
        s = s + d * d
    return s


def _pow_half(s, n):
    """``s^((n+1)/2)`` for ``n = 1, 2`` without a general power."""
    return s if n == 1 else s * np.sqrt(s)


def _corner_sum(G, t, x, lo, hi):
    """``sum over corners of +-G(t, u, v)`` with ``u, v`` box faces minus ``x``."""
    u0, u1 = lo[..., 0] - x[..., 0], hi[..., 0] - x[..., 0]
    v0, v1 = lo[..., 1] - x[..., 1], hi[..., 1] - x[..., 1]
    return G(t, u1, v1) - G(t, u0, v1) - G(t, u1, v0) + G(t, u0, v0)


def poisson_kernel(n: int = 1) -> Kernel:
    if n not in (1, 2):
        raise InputError("built-in kernels exist for n = 1, 2")
    c = poisson_constant(n)

    def ev(t, x, y):
        return c * t / _pow_half(_sq(t, x, y), n)

    if n == 1:
        def yint(t, x, lo, hi):
            return (np.arctan((hi[..., 0] - x[..., 0]) / t) - np.arctan((lo[..., 0] - x[..., 0]) / t)) / math.pi
    else:
        def G(t, u, v):
            return np.arctan(u * v / (t * np.sqrt(t ** 2 + u ** 2 + v ** 2)))

        def yint(t, x, lo, hi):
            return c * _corner_sum(G, t, x, lo, hi)
    return Kernel(f"poisson n={n}", n, 1.0, ev, yint, convolution=True)


def riesz_kernel(j: int = 1, n: int = 1) -> Kernel:
    """``(x_j - y_j) / (t^2 + |x-y|^2)^((1+n)/2)``, unnormalized."""
    if n not in (1, 2):
        raise InputError("built-in kernels exist for n = 1, 2")
    if not 1 <= j <= n:
        raise InputError(f"Riesz index must lie in 1..{n}, got {j}")
    i = j - 1

    def ev(t, x, y):
        return (x[..., i] - y[..., i]) / _pow_half(_sq(t, x, y), n)

    if n == 1:
        def yint(t, x, lo, hi):
            a = lo[..., 0] - x[..., 0]
            b = hi[..., 0] - x[..., 0]
            return 0.5 * np.log((t ** 2 + a ** 2) / (t ** 2 + b ** 2))
    else:
        def G(t, u, v):
            # antiderivative of -u r^-3 in u then v, for the index along u
            return np.arcsinh(v / np.sqrt(t ** 2 + u ** 2))

        def yint(t, x, lo, hi):
            if i == 0:
                return _corner_sum(G, t, x, lo, hi)
            sw = [1, 0]
            return _corner_sum(G, t, x[..., sw], lo[..., sw], hi[..., sw])
    return Kernel(f"riesz j={j} n={n}", n, 1.0, ev, yint, convolution=True)


# -- Cauchy integral on a Lipschitz graph ----------------------------------------

@dataclass(frozen=True, eq=False)
class LipschitzGraph:
    """Piecewise-linear ``phi`` through samples, extended by constants."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, float)
        ys = np.asarray(self.ys, float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 1:
            raise InputError("graph samples must be matching 1-d arrays")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise InputError("graph samples must be finite")
        if np.any(np.diff(xs) <= 0):
            raise InputError("graph sample abscissae must be strictly increasing (a vertical jump is not Lipschitz)")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def lipschitz(self) -> float:
        return float(np.abs(np.diff(self.ys) / np.diff(self.xs)).max(initial=0.0))

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)

    def slope(self, x):
        """Right derivative."""
        s = np.concatenate([[0.0], np.diff(self.ys) / np.diff(self.xs), [0.0]])
        return s[np.searchsorted(self.xs, x, side="right")]


def _cauchy_parts(graph: LipschitzGraph):
    def kc(t, x, y):
        x = x[..., 0]
        y = y[..., 0]
        z = x + 1j * (t + graph(x))
        w = y + 1j * graph(y)
        return (1 + 1j * graph.slope(y)) / (w - z) / (2j * math.pi)

    def ic(t, x, lo, hi):
        # ∫ dw/(w-z) along the graph, one linear piece at a time
        x = x[..., 0]
        a = lo[..., 0]
        b = hi[..., 0]
        z = x + 1j * (t + graph(x))
        knots = graph.xs
        tot = np.zeros(np.broadcast_shapes(np.shape(z), np.shape(a)), complex)
        pts = [a]
        for k in knots:
            pts.append(np.clip(k, a, b))
        pts.append(b)
        P = np.sort(np.stack(np.broadcast_arrays(*pts), axis=-1), axis=-1)
        for s in range(P.shape[-1] - 1):
            u0, u1 = P[..., s], P[..., s + 1]
            w0 = u0 + 1j * graph(u0)
            w1 = u1 + 1j * graph(u1)
            tot += np.where(u1 > u0, np.log((w1 - z) / (w0 - z)), 0.0)
        return tot / (2j * math.pi)
    return kc, ic


def cauchy_kernel(graph: LipschitzGraph, part: str = "re") -> Kernel:
    """Real or imaginary part of the Cauchy kernel of the graph of ``phi`` (n = 1)."""
    if part not in ("re", "im"):
        raise InputError("part must be 're' or 'im'")
    kc, ic = _cauchy_parts(graph)
    take = np.real if part == "re" else np.imag
    flat = bool(np.all(graph.ys == graph.ys[0]))
    return Kernel(f"cauchy-{part} lip={graph.lipschitz:.3g}", 1, 1.0,
                  lambda t, x, y: take(kc(t, x, y)),
                  lambda t, x, lo, hi: take(ic(t, x, lo, hi)),
                  convolution=flat, breakpoints=graph.xs.copy())


def cauchy_jump_kernel(graph: LipschitzGraph) -> Kernel:
    """Real part of the kernel of ``Theta_t - Theta_-t``: the Cauchy extension above the
    graph minus the one below.  For a flat graph it is the Poisson kernel."""
    kc, ic = _cauchy_parts(graph)
    flat = bool(np.all(graph.ys == graph.ys[0]))
    return Kernel(f"cauchy-jump lip={graph.lipschitz:.3g}", 1, 1.0,
                  lambda t, x, y: np.real(kc(t, x, y) - kc(-np.asarray(t), x, y)),
                  lambda t, x, lo, hi: np.real(ic(t, x, lo, hi) - ic(-np.asarray(t), x, lo, hi)),
                  convolution=flat, breakpoints=graph.xs.copy())


# -- tabulated kernels --------------------------------------------------------------

def tabulated_kernel(ts, xs, ys, values, delta: float = 1.0) -> Kernel:
    """Trilinear interpolation of ``k`` tabulated on a ``t x x x y`` grid (n = 1), zero outside."""
    if not 0 < delta <= 1:
        raise InputError("Hölder exponent must lie in (0, 1]")
    values = np.asarray(values, float)
    if values.shape != (len(ts), len(xs), len(ys)):
        raise InputError("table shape does not match its axes")
    interp = RegularGridInterpolator((ts, xs, ys), values, bounds_error=False, fill_value=0.0)

    def ev(t, x, y):
        pts = np.stack(np.broadcast_arrays(t, x[..., 0], y[..., 0]), axis=-1)
        return interp(pts.reshape(-1, 3)).reshape(pts.shape[:-1])
    return Kernel("custom", 1, delta, ev, None, convolution=False)


def load_tabulated_kernel(text: str) -> Kernel:
    """Table format: lines ``delta <d>``, ``t <values>``, ``x <values>``, ``y <values>``,
    then ``len(t)*len(x)`` rows of ``len(y)`` values (t slowest)."""
    axes, rows, delta = {}, [], 1.0
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, *rest = line.split()
        if head == "delta":
            delta = float(rest[0])
        elif head in ("t", "x", "y"):
            axes[head] = np.array([float(v) for v in rest])
        else:
            rows.append([float(v) for v in line.split()])
    if set(axes) != {"t", "x", "y"}:
        raise InputError("table needs t, x and y axes")
    vals = np.array(rows).reshape(len(axes["t"]), len(axes["x"]), len(axes["y"]))
    return tabulated_kernel(axes["t"], axes["x"], axes["y"], vals, delta)


def custom_kernel(evaluate: Callable, n: int, delta: float = 1.0, name: str = "custom") -> Kernel:
    if not 0 < delta <= 1:
        raise InputError("Hölder exponent must lie in (0, 1]")
    return Kernel(name, n, delta, evaluate)


def make_kernel(kind: str, n: int = 1, j: int = 1, graph: LipschitzGraph | None = None,
                evaluate: Callable | None = None, delta: float = 1.0) -> Kernel:
    if kind == "poisson":
        return poisson_kernel(n)
    if kind == "riesz":
        return riesz_kernel(j, n)
    if kind in ("cauchy-re", "cauchy-im"):
        if n != 1:
            raise InputError("the graph Cauchy kernel is implemented for n = 1")
        if graph is None:
            graph = LipschitzGraph(np.array([0.0]), np.array([0.0]))
        return cauchy_kernel(graph, kind[-2:])
    if kind == "custom":
        if evaluate is None:
            raise InputError("custom kernel needs an evaluator")
        return custom_kernel(evaluate, n, delta)
    raise InputError(f"unknown kernel kind {kind!r}")


def parse_kernel(spec: str) -> Kernel:
    """``"poisson n=1"``, ``"riesz j=1 n=2"``, ``"cauchy-re lip=x0,p0;x1,p1;..."``,
    ``"custom table=<path>"``."""
    parts = spec.split()
    if not parts:
        raise InputError("empty kernel spec")
    kv = dict(tok.split("=", 1) for tok in parts[1:] if "=" in tok)
    kind = parts[0]
    if kind == "custom":
        if "table" not in kv:
            raise InputError("custom kernel spec needs table=<path>")
        with open(kv["table"], encoding="utf-8") as fh:
            return load_tabulated_kernel(fh.read())
    graph = None
    if "lip" in kv:
        pairs = [p.split(",") for p in kv["lip"].split(";") if p]
        graph = LipschitzGraph(np.array([float(a) for a, _ in pairs]), np.array([float(b) for _, b in pairs]))
    return make_kernel(kind, int(kv.get("n", 1)), int(kv.get("j", 1)), graph)


# -- regularity -----------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    sup_ratio: float
    worst: tuple | None


def check_regularity(k: Kernel, direction: str, samples) -> RegularityReport:
    """Sup of ``|Δk| d^(n+δ) / |h|^δ`` with ``d = |(t,x) - (0,y)|``.

    Each sample is ``((t, x, y), h)``.  For ``direction = "x"``, ``h = (s, z)``
    moves ``(t, x)``; for ``"y"``, ``h = z`` moves ``y``.  Samples must satisfy
    ``|h| <= d/2``.
    """
    if direction not in ("x", "y"):
        raise InputError("direction must be 'x' or 'y'")
    best, worst = 0.0, None
    n = k.n
    for (t, x, y), h in samples:
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float))
        h = np.atleast_1d(np.asarray(h, float))
        d = math.sqrt(t ** 2 + float(np.sum((x - y) ** 2)))
        hn = float(np.linalg.norm(h))
        if hn > d / 2 * (1 + 1e-12):
            raise DomainError(f"sample displacement {hn:g} exceeds half the distance {d:g}")
        if hn == 0:
            continue
        if direction == "x":
            if h.shape != (n + 1,):
                raise InputError("x-direction displacement is (s, z)")
            d1 = k(t + h[0], x + h[1:], y) - k(t, x, y)
        else:
            if h.shape != (n,):
                raise InputError("y-direction displacement is z")
            d1 = k(t, x, y + h) - k(t, x, y)
        r = abs(float(d1)) * d ** (n + k.delta) / hn ** k.delta
        if r > best:
            best, worst = r, ((t, tuple(x), tuple(y)), tuple(h))
    return RegularityReport(best, worst)


def regularity_samples(n: int, direction: str, count: int, seed: int = 0):
    """Log-spaced random samples obeying the half-distance constraint."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        d = 10.0 ** rng.uniform(-3, 1)
        v = rng.normal(size=n + 1)
        v[0] = abs(v[0])
        v = v / np.linalg.norm(v) * d
        t, x = v[0], v[1:]
        y = np.zeros(n)
        hr = d / 2 * 10.0 ** rng.uniform(-4, 0)
        if direction == "x":
            h = rng.normal(size=n + 1)
            h = h / np.linalg.norm(h) * hr
            if t + h[0] <= 0:
                h[0] = -h[0]
        else:
            h = rng.normal(size=n)
            h = h / np.linalg.norm(h) * hr
        out.append(((float(t), x, y), h))
    return out
