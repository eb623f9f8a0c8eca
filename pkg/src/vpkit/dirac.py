"""Radial Dirac bound states in central potentials.

Conventions: u = (G, F) with the radial equations

    G' = -kappa G / r + (E - V + 1) F
    F' =  kappa F / r - (E - V - 1) G,

energies include the rest mass and states are normalised to
int (G^2 + F^2) dr = 1.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .constants import ALPHA
from .grid import RadialFunction
from .magnus import propagate, step_propagators

_LABEL = re.compile(r"^(\d+)([spdf])(?:_?(\d+)/2)?$")
_SUBSCRIPTS = str.maketrans("₀₁₂₃₄₅₆₇₈₉", "0123456789")


class BoundStateSearchError(RuntimeError):
    pass


def parse_state(label: str) -> tuple:
    """Spectroscopic label ('1s', '2s1/2', '2p_1/2', '2p₃/₂') -> (n, kappa)."""
    m = _LABEL.match(label.strip().translate(_SUBSCRIPTS).replace("⁄", "/"))
    if m is None:
        raise ValueError(f"unknown state label {label!r}")
    n, l = int(m.group(1)), "spdf".index(m.group(2))
    if m.group(3) is None:
        if l != 0:
            raise ValueError(f"label {label!r} needs j for l > 0")
        two_j = 1
    else:
        two_j = int(m.group(3))
    if two_j == 2 * l + 1:
        kappa = -(l + 1)
    elif two_j == 2 * l - 1 and l > 0:
        kappa = l
    else:
        raise ValueError(f"j = {two_j}/2 impossible for l = {l} in {label!r}")
    if n <= l:
        raise ValueError(f"n = {n} too small for l = {l} in {label!r}")
    return n, kappa


def state_label(n: int, kappa: int) -> str:
    l = kappa if kappa > 0 else -kappa - 1
    return f"{n}{'spdf'[l]}{2 * abs(kappa) - 1}/2"


def analytic_coulomb_energy(Z: int, n_principal: int, kappa: int, alpha: float = ALPHA) -> float:
    """Dirac energy (rest mass included) of a point-Coulomb level."""
    za = Z * alpha
    if kappa == 0 or n_principal < abs(kappa) or (kappa > 0 and n_principal == kappa):
        raise ValueError(f"no level with n={n_principal}, kappa={kappa}")
    if za >= abs(kappa):
        raise ValueError(f"Z alpha = {za} >= |kappa|: point-Coulomb level undefined")
    gamma = math.sqrt(kappa * kappa - za * za)
    nr = n_principal - abs(kappa)
    return 1.0 / math.sqrt(1.0 + (za / (nr + gamma)) ** 2)


def expected_nodes(n_radial: int, kappa: int) -> int:
    """Zeros of G for the n_radial-th level of a kappa channel (n_radial = n - |kappa|)."""
    return n_radial if kappa < 0 else n_radial - 1


@dataclass(frozen=True, eq=False)
class BoundState:
    kappa: int
    n_radial: int
    energy: float
    G: RadialFunction
    F: RadialFunction

    @property
    def n_principal(self) -> int:
        return self.n_radial + abs(self.kappa)

    @property
    def density(self) -> np.ndarray:
        """Radial probability density G^2 + F^2 on the grid."""
        return self.G.values ** 2 + self.F.values ** 2

    def expectation(self, potential: RadialFunction) -> float:
        return self.G.grid.integrate(self.density * potential.values)

    def norm(self) -> float:
        return self.G.grid.integrate(self.density)

    def nodes(self) -> int:
        g = self.G.values
        amp = np.max(np.abs(g))
        sig = g[np.abs(g) > 1e-10 * amp]
        return int(np.count_nonzero(np.diff(np.sign(sig))))


def origin_behaviour(potential: RadialFunction, alpha: float = ALPHA):
    """Return the point-Coulomb strength Z alpha if V ~ -Z alpha / r at the origin, else None."""
    r0, r1 = potential.grid.points[:2]
    c0 = -r0 * float(potential(r0))
    c1 = -r1 * float(potential(r1))
    if c0 > 0 and abs(c1 - c0) < 1e-3 * c0:
        return c0
    return None


def regular_start(r0: float, kappa: int, energy, v0, coulomb_strength=None):
    """Leading power-series behaviour of the regular solution at r0."""
    e = np.asarray(energy)
    if coulomb_strength is not None:
        za = coulomb_strength
        gamma = math.sqrt(kappa * kappa - za * za)
        g = np.ones_like(e, dtype=np.result_type(e, float))
        f = g * (gamma + kappa) / za
        return np.stack([g, f], axis=-1)
    k = abs(kappa)
    if kappa < 0:
        g = np.ones_like(e, dtype=np.result_type(e, float))
        f = -(e - v0 - 1.0) * r0 / (2 * k + 1)
    else:
        f = np.ones_like(e, dtype=np.result_type(e, float))
        g = (e - v0 + 1.0) * r0 / (2 * k + 1)
    return np.stack([g * np.ones_like(f), f * np.ones_like(g)], axis=-1)


def decaying_start(energy, kappa: int | None = None, r: float | None = None):
    """Direction of the solution decaying like exp(-lambda r).

    With ``kappa`` and ``r`` the free-particle ratio of modified spherical
    Bessel functions is used, otherwise its large-r limit.
    """
    e = np.asarray(energy)
    lam = np.sqrt((1.0 - e * e).astype(complex) if np.iscomplexobj(e) else 1.0 - e * e)
    g = np.ones_like(lam)
    f = -lam / (1.0 + e)
    if kappa is not None and r is not None and np.all(np.abs(np.imag(lam)) <= 1e-12 * np.abs(lam)):
        from scipy.special import kve

        l = kappa if kappa > 0 else -kappa - 1
        lb = l - 1 if kappa > 0 else l + 1
        x = np.real(lam) * r
        f = f * kve(lb + 0.5, x) / kve(l + 0.5, x)
    return np.stack([g, f], axis=-1)


def _sommerfeld_guess(zeff: float, n_radial: int, kappa: int, alpha: float) -> tuple:
    za = min(zeff * alpha, abs(kappa) - 1e-6)
    gamma = math.sqrt(kappa * kappa - za * za)

    def lev(nr):
        return 1.0 / math.sqrt(1.0 + (za / (nr + gamma)) ** 2)

    first = 0 if kappa < 0 else 1
    nr = n_radial
    e0 = lev(nr)
    gaps = [lev(nr + 1) - e0]
    if nr > first:
        gaps.append(e0 - lev(nr - 1))
    return e0, min(gaps)


class _Shooter:
    def __init__(self, potential: RadialFunction, kappa: int, alpha: float):
        self.pot = potential
        self.kappa = kappa
        self.r = potential.grid.points
        self.coulomb = origin_behaviour(potential, alpha)
        self.v0 = float(potential(self.r[0]))

    def solve(self, energy: float):
        r = self.r
        props = step_propagators(r, self.kappa, energy, self.pot)
        vv = self.pot.values
        forbidden = np.nonzero(energy - vv - 1.0 < 0.0)[0]
        allowed = np.nonzero(energy - vv - 1.0 >= 0.0)[0]
        m = int(allowed[-1]) if allowed.size else r.size // 2
        m = min(max(m, 8), r.size - 8)
        del forbidden
        u0 = regular_start(r[0], self.kappa, energy, self.v0, self.coulomb)
        out_d, out_l = propagate(props, u0, 0, m)
        in_d, in_l = propagate(props, decaying_start(energy, self.kappa, r[-1]), r.size - 1, m)
        return m, (out_d, out_l), (in_d, in_l)

    def mismatch(self, energy: float) -> float:
        m, (od, _), (idr, _) = self.solve(energy)
        a = od[-1]
        b = idr[0]
        return float(a[0] * b[1] - a[1] * b[0])


def solve_bound_state(potential: RadialFunction, kappa: int, n_radial: int,
                      energy_guess: float | None = None, alpha: float = ALPHA,
                      xtol: float = 1e-15) -> BoundState:
    """Bound level ``n_radial`` (= n - |kappa|) of channel ``kappa`` in ``potential``.

    The regular and decaying solutions are matched at the classical turning
    point; the energy is the root of their Wronskian-type mismatch, searched
    in a bracket around a Sommerfeld estimate that uses the far-field charge.
    """
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    if kappa > 0 and n_radial < 1:
        raise ValueError("kappa > 0 levels start at n_radial = 1")
    sh = _Shooter(potential, kappa, alpha)
    zeff = -potential.grid.r_max * potential.values[-1] / alpha
    if energy_guess is None:
        e0, gap = _sommerfeld_guess(max(zeff, 1e-3), n_radial, kappa, alpha)
    else:
        e0 = float(energy_guess)
        gap = _sommerfeld_guess(max(zeff, 1e-3), n_radial, kappa, alpha)[1]
    half = 0.02 * gap
    lo, hi = e0 - half, min(e0 + half, 1.0 - 1e-14)
    f_lo, f_hi = sh.mismatch(lo), sh.mismatch(hi)
    tries = 0
    while f_lo * f_hi > 0.0:
        tries += 1
        if tries > 12:
            raise BoundStateSearchError(
                f"no sign change of the matching function for kappa={kappa}, n_radial={n_radial} "
                f"in bracket [{lo:.12f}, {hi:.12f}]")
        half *= 1.6
        lo, hi = e0 - half, min(e0 + half, 1.0 - 1e-14)
        f_lo, f_hi = sh.mismatch(lo), sh.mismatch(hi)
    energy = brentq(sh.mismatch, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    state = _assemble(sh, energy, kappa, n_radial)
    want = expected_nodes(n_radial, kappa)
    if state.nodes() != want:
        raise BoundStateSearchError(
            f"converged to a level with {state.nodes()} nodes, expected {want} "
            f"(kappa={kappa}, E={energy:.12f}, bracket [{lo:.10f}, {hi:.10f}])")
    return state


def _assemble(sh: _Shooter, energy: float, kappa: int, n_radial: int) -> BoundState:
    m, (od, ol), (idr, il) = sh.solve(energy)
    grid = sh.pot.grid
    # bring both pieces to a common scale relative to the matching node
    out = od * np.exp(ol - ol[-1])[:, None]
    inn = idr * np.exp(il - il[0])[:, None]
    j = 0 if abs(out[-1, 0]) >= abs(out[-1, 1]) else 1
    inn = inn * (out[-1, j] / inn[0, j])
    u = np.concatenate([out[:-1], inn], axis=0)
    nrm = grid.integrate(u[:, 0] ** 2 + u[:, 1] ** 2)
    u = u / math.sqrt(nrm)
    # sign convention: G > 0 near the origin
    first = np.nonzero(np.abs(u[:, 0]) > 1e-12 * np.max(np.abs(u[:, 0])))[0][0]
    if u[first, 0] < 0:
        u = -u
    return BoundState(kappa, n_radial, float(energy),
                      RadialFunction(grid, u[:, 0], label="G"), RadialFunction(grid, u[:, 1], label="F"))


def apply_hamiltonian(state: BoundState, potential: RadialFunction):
    """Numerically apply the radial Dirac Hamiltonian to (G, F); returns (HG, HF)."""
    r = state.G.grid.points
    g, f = state.G.values, state.F.values
    dg = _deriv(r, g, state.G.grid)
    df = _deriv(r, f, state.G.grid)
    v = potential.values
    k = state.kappa
    hg = (v + 1.0) * g - df + k * f / r
    hf = dg + k * g / r + (v - 1.0) * f
    return hg, hf


def _deriv(r, y, grid):
    out = np.empty_like(y)
    for a, b in grid.segments:
        out[a:b + 1] = np.gradient(y[a:b + 1], r[a:b + 1], edge_order=2)
    return out


def bound_grid(model, n: int = 4000, r_min: float = 1e-7, r_max: float = 60.0):
    """Default grid for bound states: log-linear, nuclear radius as a node."""
    from .grid import build_grid

    return build_grid(r_min, r_max, n, scheme="log_linear", breakpoints=model.breakpoints, beta=4.0)
