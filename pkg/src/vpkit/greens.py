"""Radial Dirac Green functions at imaginary energy and the Wichmann-Kroll density.

For the radial Hamiltonian

    H_kappa = [[V + 1, -d/dr + kappa/r], [d/dr + kappa/r, V - 1]]

the Green function g = (H_kappa - z)^-1 is

    g(r, r') = u_inf(r>) u_0(r<)^T / W,   W = G_inf F_0 - G_0 F_inf,

with u_0 regular at the origin and u_inf decaying at infinity.  The
vacuum charge (proton-positive number density) is

    n(r) = (1/pi) int_0^inf du sum_kappa 2|kappa| / (4 pi r^2) Re tr g_kappa(r, r, iu).

Charge conjugation maps (kappa, V, E) to (-kappa, -V, -E), so the sum over
both signs of kappa equals Re[tr g_k(V) - tr g_k(-V)] for k = |kappa|: only
odd orders in V survive.  Removing the linear (Uehling-type) order leaves
the Wichmann-Kroll density.  The linear order is taken from the same
discretisation by a Richardson-extrapolated central difference in the
coupling, so discretisation errors cancel between the terms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .constants import ALPHA
from .dirac import decaying_start, origin_behaviour, regular_start
from .grid import RadialFunction, RadialGrid
from .magnus import propagate, step_propagators
from .nuclear import NuclearModel, coulomb_potential

log = logging.getLogger(__name__)

LINEAR_STEP = 1e-2
# Above this lambda * (local step) the integrand is exponentially small and
# the Magnus steps no longer resolve it, so it is set to zero.
STEP_RESOLUTION_LIMIT = 10.0
# Partial waves below this fraction of the leading one sit at the grid's
# discretisation floor; their ratios carry no convergence information.
NOISE_FLOOR = 1e-4
# Geometric tails are only trusted below this ratio; closer to 1 the series
# is not yet (or no longer) geometric and q/(1-q) amplifies the last term.
TAIL_RATIO_MAX = 0.9


class ConvergenceError(RuntimeError):
    """Raised when a partial-wave or quadrature series fails to converge."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def u_quadrature(n_nodes: int = 64, scale: float = 1.0):
    """Nodes and weights for int_0^inf du via u = scale (1 - t)/t and Gauss-Legendre in t."""
    if n_nodes < 2:
        raise ValueError("need at least two u nodes")
    if not scale > 0:
        raise ValueError("u scale must be positive")
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    t = 0.5 * (x + 1.0)
    return scale * (1.0 - t) / t, scale * 0.5 * w / (t * t)


def _solution_pair(r, kappa, energies, potential, v0, coulomb_strength=None, tail: float = 20.0):
    """Regular and decaying solutions (directions, log norms) at every node.

    The decaying solution starts ``tail`` beyond the last node so that the
    error of its asymptotic start direction has died out on the grid.
    """
    n = r.size
    if tail > 0:
        r = np.concatenate([r, r[-1] + _extension_offsets(r[-1] - r[-2], tail)])
    props = step_propagators(r, kappa, energies, potential)
    start = regular_start(r[0], kappa, energies, v0, coulomb_strength)
    d0, l0 = propagate(props, start, 0, n - 1)
    dinf, linf = propagate(props, decaying_start(energies, kappa, r[-1]), r.size - 1, 0)
    return d0, l0, dinf[:n], linf[:n]


def _extension_offsets(h0: float, length: float, growth: float = 1.15, h_max: float = 0.25):
    steps = []
    h, total = h0, 0.0
    while total < length:
        h = min(h * growth, h_max)
        total += h
        steps.append(total)
    return np.array(steps)


def _diagonal_trace(d0, dinf):
    num = d0[..., 0] * dinf[..., 0] + d0[..., 1] * dinf[..., 1]
    den = dinf[..., 0] * d0[..., 1] - d0[..., 0] * dinf[..., 1]
    return num / den


def free_solutions(kappa: int, energy: complex, r):
    """Closed-form free regular and decaying solutions, scaled by exp(-+lambda r).

    Returns (u0, uinf, lam, W) where the true solutions are
    u0 * exp(lam r) and uinf * exp(-lam r) and W is their (constant) Wronskian.
    """
    r = np.asarray(r, dtype=float)
    lam = np.sqrt(1.0 - energy * energy + 0j)
    if abs(lam.imag) > 1e-12 * abs(lam):
        raise ValueError("closed-form free solutions implemented for real lambda only")
    lam = lam.real
    l = kappa if kappa > 0 else -kappa - 1
    lb = l - 1 if kappa > 0 else l + 1
    x = lam * r
    pre = np.sqrt(math.pi / (2.0 * x))
    il, ilb = pre * special.ive(l + 0.5, x), pre * special.ive(lb + 0.5, x)
    kl, klb = pre * special.kve(l + 0.5, x), pre * special.kve(lb + 0.5, x)
    u0 = np.stack([r * il, lam * r * ilb / (energy + 1.0)], axis=-1)
    uinf = np.stack([r * kl, -lam * r * klb / (energy + 1.0)], axis=-1)
    W = math.pi / (2.0 * lam * (energy + 1.0))
    return u0, uinf, lam, W


def free_trace(kappa: int, u: float, r):
    """tr g0_kappa(r, r, iu) of the free radial Dirac Green function."""
    u0, uinf, _, W = free_solutions(kappa, 1j * u, r)
    return (u0[..., 0] * uinf[..., 0] + u0[..., 1] * uinf[..., 1]) / W


def free_kernel(kappa: int, u: float, r, r_prime):
    """2x2 free radial Green function g0_kappa(r, r', iu) (broadcast over r, r')."""
    r = np.asarray(r, dtype=float)
    rp = np.asarray(r_prime, dtype=float)
    r, rp = np.broadcast_arrays(r, rp)
    big, small = np.maximum(r, rp), np.minimum(r, rp)
    u0, _, lam, W = free_solutions(kappa, 1j * u, small)
    _, uinf, _, _ = free_solutions(kappa, 1j * u, big)
    fac = np.exp(-lam * (big - small)) / W
    out = fac[..., None, None] * uinf[..., :, None] * u0[..., None, :]
    swap = r < rp  # g(r, r') = g(r', r)^T
    out[swap] = np.swapaxes(out[swap], -1, -2)
    return out


@dataclass(frozen=True, eq=False)
class GreenComponents:
    """Radial Green function of one kappa channel at E = iu on a grid."""

    kappa: int
    u: float
    grid: RadialGrid
    regular: tuple  # (directions (n, 2), log norms (n,))
    decaying: tuple

    def _cross(self, i):
        d0, dinf = self.regular[0][i], self.decaying[0][i]
        return dinf[..., 0] * d0[..., 1] - d0[..., 0] * dinf[..., 1]

    def log_wronskian(self):
        """log W evaluated at every node (constant up to rounding)."""
        idx = np.arange(len(self.grid))
        return self.regular[1] + self.decaying[1] + np.log(self._cross(idx).astype(complex))

    def wronskian_deviation(self) -> float:
        lw = self.log_wronskian()
        return float(np.max(np.abs(np.exp(lw - lw[0]) - 1.0)))

    def kernel(self, i, j):
        """g(r_i, r_j) as 2x2 complex arrays (broadcast over index arrays)."""
        i, j = np.broadcast_arrays(np.asarray(i), np.asarray(j))
        big, small = np.maximum(i, j), np.minimum(i, j)
        d0, l0 = self.regular
        dinf, linf = self.decaying
        fac = np.exp(l0[small] - l0[big]) / self._cross(big)
        out = fac[..., None, None] * dinf[big][..., :, None] * d0[small][..., None, :]
        swap = i < j
        out[swap] = np.swapaxes(out[swap], -1, -2)
        return out

    def trace_diagonal(self):
        return _diagonal_trace(self.regular[0], self.decaying[0])

    @property
    def free_trace(self):
        return free_trace(self.kappa, self.u, self.grid.points)


def radial_green(potential: RadialFunction, kappa: int, u: float, grid: RadialGrid | None = None,
                 alpha: float = ALPHA) -> GreenComponents:
    """Green function of channel ``kappa`` at energy iu, built from solutions on ``grid``."""
    if not u > 0:
        raise ValueError("imaginary energy magnitude u must be positive")
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    grid = grid or potential.grid
    r = grid.points
    za = origin_behaviour(potential, alpha)
    d0, l0, dinf, linf = _solution_pair(r, kappa, 1j * u, potential, float(potential(r[0])), za)
    gc = GreenComponents(kappa, float(u), grid, (d0, l0), (dinf, linf))
    lw = gc.log_wronskian()
    if not np.all(np.isfinite(lw)):
        raise ConvergenceError(f"Wronskian not finite for kappa={kappa}, u={u}")
    return gc


def odd_traces(potential, v0, k, energies, r, scales):
    """Re[tr g_k(sV) - tr g_k(-sV)] for each scale s; array (len(scales), n_r, n_u)."""
    out = []
    for s in scales:
        plus = _solution_pair(r, k, energies, lambda x, s=s: s * potential(x), s * v0)
        minus = _solution_pair(r, k, energies, lambda x, s=s: -s * potential(x), -s * v0)
        out.append((_diagonal_trace(plus[0], plus[2]) - _diagonal_trace(minus[0], minus[2])).real)
    return np.array(out)


def wk_partial_wave(potential, v0, k: int, u_nodes, u_weights, r, step: float = LINEAR_STEP):
    """Wichmann-Kroll density contribution of |kappa| = k (both signs, multiplicity included)."""
    energies = 1j * np.asarray(u_nodes)
    odd = odd_traces(potential, v0, k, energies, r, (1.0, step, 2.0 * step))
    lin1 = odd[1] / step
    lin2 = odd[2] / (2.0 * step)
    linear = (4.0 * lin1 - lin2) / 3.0
    integrand = odd[0] - linear  # (n_r, n_u)
    dr = np.diff(r)
    local = np.maximum(np.append(dr, dr[-1]), np.insert(dr, 0, dr[0]))
    lam = np.sqrt(1.0 + np.asarray(u_nodes) ** 2)
    integrand = np.where(local[:, None] * lam[None, :] > STEP_RESOLUTION_LIMIT, 0.0, integrand)
    return (2.0 * k / (4.0 * math.pi * r * r)) * (integrand @ u_weights) / math.pi


@dataclass(frozen=True, eq=False)
class ChargeDensity:
    """Induced charge density (proton-positive number density) with provenance."""

    density: RadialFunction
    kappa_max: int = 0
    u_nodes: int = 0
    tail_extrapolated: bool = False
    partial_waves: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> RadialGrid:
        return self.density.grid

    def total_charge(self) -> float:
        r = self.grid.points
        return self.grid.integrate(4.0 * math.pi * r * r * self.density.values)

    def to_csv(self, path, constants=None):
        from .constants import DEFAULT, natural_to_fm

        c = constants or DEFAULT
        r = self.grid.points
        data = np.column_stack([r, natural_to_fm(r, c), self.density.values])
        np.savetxt(path, data, delimiter=",", header="r_natural,r_fm,rho", comments="", fmt="%.17g")


def wk_grid(model: NuclearModel, n: int = 2000, r_min: float = 1e-6, r_max: float = 30.0) -> RadialGrid:
    from .grid import build_grid

    return build_grid(r_min, r_max, n, scheme="log_linear", breakpoints=model.breakpoints, beta=1.0)


def geometric_tail(terms: np.ndarray, start: int = 3):
    """Ratio of successive partial-wave norms and the implied tail factor q/(1-q)."""
    norms = np.array([np.sum(np.abs(t)) for t in terms])
    ratios = norms[1:] / np.where(norms[:-1] > 0, norms[:-1], np.inf)
    q = float(ratios[-1]) if ratios.size else 0.0
    return norms, ratios, q


def wk_density(model: NuclearModel, kappa_max: int = 10, u_nodes: int = 64,
               grid: RadialGrid | None = None, alpha: float = ALPHA,
               extrapolate: bool = True, check_tail: bool = True,
               u_scale_per_kappa: float = 2.0) -> ChargeDensity:
    """Wichmann-Kroll vacuum-polarisation density of an extended nucleus.

    Partial wave |kappa| = k uses the u map with scale ``u_scale_per_kappa * k``:
    higher partial waves sample larger imaginary energies.
    """
    if kappa_max < 1:
        raise ValueError("kappa_max must be >= 1")
    if model.shape == "point":
        raise ValueError("Wichmann-Kroll density needs an extended nuclear model")
    grid = grid or wk_grid(model)
    r = grid.points
    vfun = coulomb_potential(model, grid, alpha)
    v0 = float(vfun(r[0]))
    terms = []
    for k in range(1, kappa_max + 1):
        un, uw = u_quadrature(u_nodes, u_scale_per_kappa * k)
        terms.append(wk_partial_wave(vfun, v0, k, un, uw, r))
        log.debug("WK partial wave %d done", k)
    terms = np.array(terms)
    r2 = 4.0 * math.pi * r * r
    charges = np.array([grid.integrate(r2 * t) for t in terms])
    norms, ratios, q = geometric_tail([grid.integrate(r2 * np.abs(t)) for t in terms])
    diag = {
        "partial_wave_norms": norms.tolist(),
        "partial_wave_charges": charges.tolist(),
        "successive_ratios": ratios.tolist(),
    }
    floor = bool(norms[-1] < NOISE_FLOOR * norms[0])
    diag["below_noise_floor"] = floor
    if check_tail and kappa_max >= 2 and not q < 1.0 and not floor:
        raise ConvergenceError(f"partial-wave series not decreasing (last ratio {q:.3g})", diag)
    total = terms.sum(axis=0)
    tail = np.zeros_like(total)
    if extrapolate and kappa_max >= 2 and 0.0 < q < TAIL_RATIO_MAX:
        tail = terms[-1] * q / (1.0 - q)
        total = total + tail
    diag["tail_ratio"] = q
    diag["tail_charge_norm"] = float(grid.integrate(r2 * np.abs(tail)))
    dens = RadialFunction(grid, total, label="rho_WK")
    return ChargeDensity(dens, kappa_max, u_nodes, bool(extrapolate and np.any(tail)), terms, diag)


def sign_change_radius(density: ChargeDensity, after: float = 0.0) -> float:
    """First radius beyond ``after`` where the density changes sign (linear interpolation)."""
    r = density.grid.points
    v = density.density.values
    idx = np.nonzero(r > after)[0]
    s = np.sign(v[idx])
    flips = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if flips.size == 0:
        raise ConvergenceError("density has no sign change beyond the nuclear radius")
    a = idx[flips[0]]
    return float(r[a] - v[a] * (r[a + 1] - r[a]) / (v[a + 1] - v[a]))


def zwk(density: ChargeDensity, model: NuclearModel | None = None) -> float:
    """Charge enclosed inside the first sign change beyond the nucleus."""
    after = model.R0 * (1.0 + 1e-9) if model is not None else 0.0
    r_minus = sign_change_radius(density, after)
    r = density.grid.points
    vals = 4.0 * math.pi * r * r * density.density.values
    cum = density.grid.cumulative(vals)
    k = int(np.searchsorted(r, r_minus))
    # linear completion of the last partial interval
    frac = (r_minus - r[k - 1]) / (r[k] - r[k - 1])
    return float(cum[k - 1] + 0.5 * (r_minus - r[k - 1]) * (vals[k - 1] + (vals[k - 1] + frac * (vals[k] - vals[k - 1]))))


def electrostatic_potential(density: RadialFunction, grid: RadialGrid | None = None,
                            alpha: float = ALPHA) -> RadialFunction:
    """Electron potential energy of a spherical charge density, -alpha int n / r>."""
    src = density.grid
    r = src.points
    n = density.values
    inner = src.cumulative(4.0 * math.pi * r * r * n)
    outer_c = src.cumulative(4.0 * math.pi * r * n)
    outer = outer_c[-1] - outer_c
    vals = -alpha * (inner / r + outer)
    out = RadialFunction(src, vals, label="V_es")
    if grid is None or grid is src:
        return out
    return RadialFunction(grid, _resample(out, grid.points, inner[-1], alpha), label="V_es")


def _resample(fun: RadialFunction, points, total, alpha):
    """Interpolate inside the source range; outside use the monopole / inner constant."""
    src = fun.grid
    out = np.empty(points.shape)
    inside = (points >= src.r_min) & (points <= src.r_max)
    out[inside] = fun(points[inside])
    out[points > src.r_max] = -alpha * total / points[points > src.r_max]
    out[points < src.r_min] = fun.values[0]
    return out


def wk_potential(density: ChargeDensity, grid: RadialGrid | None = None, alpha: float = ALPHA) -> RadialFunction:
    """Electrostatic potential energy of the Wichmann-Kroll density."""
    return electrostatic_potential(density.density, grid, alpha)
