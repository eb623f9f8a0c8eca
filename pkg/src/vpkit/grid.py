"""Radial grids, quadrature weights and tabulated radial functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import lambertw


# End corrections for an equally spaced composite rule: Gregory's formula
# with seven forward differences (exact through degree 7), and a
# fourth-order fallback for short segments.
_GREGORY_END8 = np.array([1070017.0, 5537111.0, 932517.0, 6527875.0, 1494755.0, 4641093.0, 3349879.0,
                          3662753.0]) / 3628800.0
_GREGORY_END = np.array([17.0, 59.0, 43.0, 49.0]) / 48.0


def uniform_weights(m: int, h: float) -> np.ndarray:
    """Quadrature weights for ``m`` equally spaced nodes with spacing ``h``."""
    if m < 2:
        raise ValueError("need at least two nodes")
    w = np.full(m, h)
    if m >= 16:
        w[:8] *= _GREGORY_END8
        w[-8:] *= _GREGORY_END8[::-1]
    elif m >= 8:
        w[:4] *= _GREGORY_END
        w[-4:] *= _GREGORY_END[::-1]
    elif m % 2 == 1 and m >= 3:
        w[1:-1:2] *= 4.0 / 3.0
        w[2:-1:2] *= 2.0 / 3.0
        w[0] *= 1.0 / 3.0
        w[-1] *= 1.0 / 3.0
    else:
        w[0] *= 0.5
        w[-1] *= 0.5
    return w


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing radial nodes with per-node integration weights.

    ``breakpoints`` holds indices of interior nodes where the grid is split
    into independently mapped segments; quadrature and interpolation never
    reach across a breakpoint, so functions with kinks there stay accurate.
    """

    points: np.ndarray
    integration_weights: np.ndarray
    breakpoints: tuple = ()
    scheme: str = "custom"

    def __post_init__(self):
        r = _freeze(self.points)
        w = _freeze(self.integration_weights)
        object.__setattr__(self, "points", r)
        object.__setattr__(self, "integration_weights", w)
        object.__setattr__(self, "breakpoints", tuple(int(b) for b in self.breakpoints))
        if r.ndim != 1 or r.size < 2 or w.shape != r.shape:
            raise ValueError("points and weights must be 1-d arrays of equal length")
        if not np.all(np.isfinite(r)) or r[0] <= 0.0 or np.any(np.diff(r) <= 0.0):
            raise ValueError("grid points must be finite, positive and strictly increasing")
        for b in self.breakpoints:
            if not 0 < b < r.size - 1:
                raise ValueError(f"breakpoint index {b} is not interior")

    def __len__(self):
        return self.points.size

    @property
    def r_min(self) -> float:
        return float(self.points[0])

    @property
    def r_max(self) -> float:
        return float(self.points[-1])

    @property
    def segments(self) -> list:
        """Inclusive (first, last) node index pairs of the smooth segments."""
        edges = [0, *self.breakpoints, self.points.size - 1]
        return list(zip(edges[:-1], edges[1:]))

    def integrate(self, values) -> float:
        return float(np.dot(self.integration_weights, values))

    def cumulative(self, values) -> np.ndarray:
        """Running integral from ``r_min`` to each node (trapezoid + endpoint cubic correction)."""
        values = np.asarray(values)
        r = self.points
        out = np.zeros(values.shape, dtype=values.dtype)
        for a, b in self.segments:
            out[a + 1 : b + 1] = out[a] + _cumulative_segment(r[a : b + 1], values[a : b + 1])
        return out

    def key(self) -> str:
        """Short content description used in cache keys."""
        return f"{self.scheme}:{self.points.size}:{self.r_min:.6e}:{self.r_max:.6e}:{self.breakpoints}"


def _cumulative_segment(r: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Cumulative integral over each interval using local cubic interpolation."""
    m = r.size
    if m < 4:
        return np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(r))
    # For interval [r_i, r_{i+1}] integrate the cubic through 4 surrounding nodes.
    starts = np.clip(np.arange(m - 1) - 1, 0, m - 4)
    idx = starts[:, None] + np.arange(4)[None, :]
    x = r[idx]
    a = r[:-1]
    b = r[1:]
    # Integrals of Lagrange basis polynomials over [a, b] via 3-point Gauss rule (exact for cubics).
    gx = np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
    gw = np.array([5.0, 8.0, 5.0]) / 9.0
    pts = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * gx[None, :]
    total = 0.0
    for k in range(3):
        lw = _lagrange_weights(x, pts[:, k])
        total = total + gw[k] * np.einsum("ij,ij...->i...", lw, f[idx])
    inc = total * (0.5 * (b - a)).reshape((-1,) + (1,) * (f.ndim - 1))
    return np.cumsum(inc, axis=0)


def _lagrange_weights(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Lagrange basis weights: x has shape (m, p+1), t shape (m,)."""
    p1 = x.shape[1]
    w = np.ones_like(x)
    for j in range(p1):
        for k in range(p1):
            if k != j:
                w[:, j] *= (t - x[:, k]) / (x[:, j] - x[:, k])
    return w


def _t_of_r(r, scheme: str, beta: float):
    r = np.asarray(r, dtype=float)
    if scheme == "log":
        return np.log(r)
    return np.log(r) + r / beta


def _r_of_t(t, scheme: str, beta: float):
    t = np.asarray(t, dtype=float)
    if scheme == "log":
        return np.exp(t)
    # ln r + r/beta = t  ->  r = beta * W(exp(t) / beta)
    s = t - np.log(beta)
    small = s < 600.0
    w = np.empty_like(s)
    w[small] = np.real(lambertw(np.exp(s[small])))
    # exp(s) overflows: Newton on w + ln w = s from the asymptotic start
    big = s[~small]
    wb = big - np.log(big)
    for _ in range(6):
        wb -= (wb + np.log(wb) - big) / (1.0 + 1.0 / wb)
    w[~small] = wb
    return beta * w


def _drdt(r, scheme: str, beta: float):
    if scheme == "log":
        return r
    return 1.0 / (1.0 / r + 1.0 / beta)


def build_grid(
    r_min: float,
    r_max: float,
    n: int,
    scheme: str = "log_linear",
    breakpoints: Sequence[float] = (),
    beta: float = 4.0,
) -> RadialGrid:
    """Build a radial grid on ``[r_min, r_max]`` with ``n`` nodes.

    ``log`` spaces nodes uniformly in ln r; ``log_linear`` uses the mapping
    t = ln r + r/beta.  Radii in ``breakpoints`` (e.g. the nuclear radius)
    become exact nodes and split the grid into separately mapped segments.
    """
    if not (np.isfinite(r_min) and np.isfinite(r_max)) or not 0.0 < r_min < r_max:
        raise ValueError(f"invalid grid bounds: r_min={r_min}, r_max={r_max}")
    if int(n) != n or n < 16:
        raise ValueError(f"grid needs n >= 16 points, got {n}")
    if scheme not in ("log", "log_linear"):
        raise ValueError(f"unknown grid scheme {scheme!r}")
    n = int(n)
    cuts = sorted(float(b) for b in breakpoints if r_min < b < r_max)
    edges = [r_min, *cuts, r_max]
    t_edges = _t_of_r(np.array(edges), scheme, beta)
    lengths = np.diff(t_edges)
    nseg = len(lengths)
    # Distribute intervals proportionally to mapped length, at least 7 per segment.
    n_int = n - 1
    alloc = np.maximum(7, np.floor(lengths / lengths.sum() * n_int).astype(int))
    while alloc.sum() > n_int and alloc.max() > 7:
        alloc[np.argmax(alloc)] -= 1
    while alloc.sum() < n_int:
        alloc[np.argmax(lengths / alloc)] += 1
    if alloc.sum() != n_int:
        raise ValueError("too many breakpoints for the requested number of points")

    pts, wts, bps = [], [], []
    for s in range(nseg):
        m = alloc[s] + 1
        t = np.linspace(t_edges[s], t_edges[s + 1], m)
        r = _r_of_t(t, scheme, beta)
        r[0], r[-1] = edges[s], edges[s + 1]
        w = uniform_weights(m, t[1] - t[0]) * _drdt(r, scheme, beta)
        if s == 0:
            pts.append(r)
            wts.append(w)
        else:
            wts[-1][-1] += w[0]
            bps.append(sum(p.size for p in pts) - 1)
            pts.append(r[1:])
            wts.append(w[1:])
    return RadialGrid(np.concatenate(pts), np.concatenate(wts), tuple(bps), scheme)


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Values tabulated on a :class:`RadialGrid`.

    Between nodes the function is evaluated by local Lagrange interpolation
    of ``interpolation_order`` whose stencil stays inside one grid segment.
    An optional ``exact`` callable (e.g. an analytic potential) takes
    precedence for off-grid evaluation.
    """

    grid: RadialGrid
    values: np.ndarray
    interpolation_order: int = 3
    exact: Optional[Callable] = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        v = np.array(self.values)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        if v.shape != self.grid.points.shape:
            raise ValueError("values must match the grid length")
        if not np.all(np.isfinite(v)):
            raise ValueError("radial function values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if not 1 <= self.interpolation_order <= 7:
            raise ValueError("interpolation order must be between 1 and 7")

    @property
    def r(self) -> np.ndarray:
        return self.grid.points

    def __call__(self, r):
        if self.exact is not None:
            return self.exact(r)
        return self.interpolate(r)

    def interpolate(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        pts = self.grid.points
        rc = np.clip(r, pts[0], pts[-1])
        p = self.interpolation_order
        i = np.clip(np.searchsorted(pts, rc, side="right") - 1, 0, pts.size - 2)
        lo = np.zeros_like(i)
        hi = np.full_like(i, pts.size - 1)
        for a, b in self.grid.segments:
            inside = (i >= a) & (i < b)
            lo[inside] = a
            hi[inside] = b
        start = i - (p - 1) // 2
        start = np.minimum(np.maximum(start, lo), np.maximum(hi - p, lo))
        width = np.minimum(p + 1, hi - lo + 1)
        out = np.zeros(rc.shape, dtype=self.values.dtype)
        for wdt in np.unique(width):
            sel = width == wdt
            idx = start[sel, None] + np.arange(wdt)[None, :]
            lw = _lagrange_weights(pts[idx], rc[sel])
            out[sel] = np.sum(lw * self.values[idx], axis=1)
        return out[0] if scalar else out

    def integrate(self, weight=None) -> float:
        v = self.values if weight is None else self.values * weight
        return self.grid.integrate(v)

    def with_values(self, values, label: str = "") -> "RadialFunction":
        return RadialFunction(self.grid, values, self.interpolation_order, None, label or self.label)

    def _check(self, other: "RadialFunction"):
        if other.grid is not self.grid and not np.array_equal(other.grid.points, self.grid.points):
            raise ValueError("radial functions live on different grids")

    def __add__(self, other):
        if isinstance(other, RadialFunction):
            self._check(other)
            ex = None
            if self.exact is not None and other.exact is not None:
                f, g = self.exact, other.exact
                ex = lambda r: f(r) + g(r)  # noqa: E731
            return RadialFunction(self.grid, self.values + other.values, self.interpolation_order, ex)
        return NotImplemented

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, c):
        c = float(c)
        ex = None
        if self.exact is not None:
            f = self.exact
            ex = lambda r: c * f(r)  # noqa: E731
        return RadialFunction(self.grid, c * self.values, self.interpolation_order, ex)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self


def gauss_panels(edges: Sequence[float], order: int = 16, grade_to: Sequence[float] = (), ratio: float = 0.25,
                 depth: int = 40):
    """Composite Gauss-Legendre nodes/weights on the intervals between ``edges``.

    Intervals touching a radius listed in ``grade_to`` are split
    geometrically towards it (``depth`` levels with ``ratio``), which
    resolves integrable logarithmic endpoint singularities.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    panels = []
    edges = list(edges)
    for a, b in zip(edges[:-1], edges[1:]):
        cuts = [a, b]
        left = any(np.isclose(a, g) for g in grade_to)
        right = any(np.isclose(b, g) for g in grade_to)
        if left or right:
            inner = []
            length = b - a
            if left and right:
                mid = 0.5 * (a + b)
                for k in range(1, depth + 1):
                    inner += [a + 0.5 * length * ratio**k, b - 0.5 * length * ratio**k]
                inner.append(mid)
            elif left:
                inner = [a + length * ratio**k for k in range(1, depth + 1)]
            else:
                inner = [b - length * ratio**k for k in range(1, depth + 1)]
            cuts = sorted(set([a, b, *inner]))
        panels.extend(zip(cuts[:-1], cuts[1:]))
    nodes = []
    weights = []
    for a, b in panels:
        nodes.append(0.5 * (a + b) + 0.5 * (b - a) * x)
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)
