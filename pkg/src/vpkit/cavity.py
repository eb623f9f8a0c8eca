"""Discrete radial Dirac spectra in a spherical cavity.

The basis is dual kinetic balance on B-splines: for every spline B_i two
two-component functions

    upper type  (B_i, (1/2)(d/dr + kappa/r) B_i)
    lower type  ((1/2)(d/dr - kappa/r) B_i, B_i)

built from the splines that vanish together with their first derivative
at the wall, so both G and F vanish at r = R and the Hamiltonian matrix is
symmetric.  At the origin the spline that is linear there is kept only in
the type whose leading component must be regular (upper for kappa = -1,
lower for kappa = +1).  The kappa > 0 basis is the charge-conjugate image
of the kappa < 0 one, so the spectrum of (kappa, V) is exactly minus that
of (-kappa, -V) and the free vacuum sum cancels between paired channels.

A single wall condition (G(R) = 0 alone) leaves a combination with
G = F ~ 0 near the wall and a spurious level in the gap; clamping both
components removes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import eigh

from .grid import build_grid

SPLINE_ORDER = 8
QUAD_POINTS = 16


class SpuriousStateError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class CavityBasis:
    """Quadrature-tabulated dual-kinetic-balance basis for one kappa."""

    kappa: int
    cavity_radius: float
    basis_size: int
    knots: np.ndarray
    r: np.ndarray  # quadrature nodes
    w: np.ndarray  # quadrature weights
    G: np.ndarray  # (n_functions, nq) upper components of the basis functions
    F: np.ndarray
    dG: np.ndarray
    dF: np.ndarray

    def overlap(self) -> np.ndarray:
        return (self.G * self.w) @ self.G.T + (self.F * self.w) @ self.F.T

    def multiplication(self, values) -> np.ndarray:
        """Matrix of a scalar radial function (acting on both components)."""
        vw = self.w * values
        return (self.G * vw) @ self.G.T + (self.F * vw) @ self.F.T

    def hamiltonian(self, v) -> np.ndarray:
        w = self.w
        k_r = self.kappa / self.r
        h = (self.G * w * (v + 1.0)) @ self.G.T + (self.F * w * (v - 1.0)) @ self.F.T
        h += (self.G * w * k_r) @ self.F.T + (self.F * w * k_r) @ self.G.T
        h += (self.F * w) @ self.dG.T - (self.G * w) @ self.dF.T
        return 0.5 * (h + h.T)


def cavity_knots(n_splines: int, cavity_radius: float, first_knot: float = 1e-6,
                 breakpoints: Sequence[float] = (), order: int = SPLINE_ORDER) -> np.ndarray:
    """Clamped knot vector; breakpoints uniform in ln r + r from ``first_knot`` to the wall."""
    n_break = n_splines - order + 2  # distinct breakpoints including 0 and R
    if n_break < 17:
        raise ValueError("basis too small for the spline order")
    inner = build_grid(first_knot, cavity_radius, n_break - 1, scheme="log_linear",
                       breakpoints=breakpoints, beta=1.0).points
    return np.concatenate([np.zeros(order), inner, np.full(order - 1, cavity_radius)])


def level_count(kappa: int, basis_size: int) -> int:
    """Levels per channel: 2 basis_size, plus the linear origin spline for |kappa| = 1."""
    return 2 * basis_size + (abs(kappa) == 1)


def build_basis(kappa: int, basis_size: int = 60, cavity_radius: float = 5.0,
                breakpoints: Sequence[float] = (), first_knot: float = 1e-6) -> CavityBasis:
    """Basis for channel ``kappa`` with ``level_count(kappa, basis_size)`` functions."""
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    if basis_size < 20:
        raise ValueError("basis_size must be at least 20")
    if not cavity_radius > first_knot > 0:
        raise ValueError("need 0 < first_knot < cavity_radius")
    n_spl = basis_size + 4
    t = cavity_knots(n_spl, cavity_radius, first_knot, breakpoints)
    x, wq = np.polynomial.legendre.leggauss(QUAD_POINTS)
    edges = np.unique(t)
    a, b = edges[:-1, None], edges[1:, None]
    r = (0.5 * (a + b) + 0.5 * (b - a) * x[None, :]).ravel()
    w = (0.5 * (b - a) * wq[None, :]).ravel()
    spl = BSpline(t, np.eye(n_spl), SPLINE_ORDER - 1, extrapolate=False)
    B, dB, d2B = (np.nan_to_num(spl.derivative(d)(r) if d else spl(r)).T for d in range(3))
    k = -abs(kappa)
    kr, dt = k / r, k / (r * r)
    up = (B, 0.5 * (dB + kr * B), dB, 0.5 * (d2B + kr * dB - dt * B))
    lo = (0.5 * (dB - kr * B), B, 0.5 * (d2B - kr * dB + dt * B), dB)
    # index 0 is nonzero at the origin; the last two splines carry value and slope at the wall
    i_up = np.arange(1 if abs(kappa) == 1 else 2, n_spl - 2)
    i_lo = np.arange(2, n_spl - 2)
    G, F, dG, dF = (np.concatenate([u[i_up], l[i_lo]]) for u, l in zip(up, lo))
    if kappa > 0:
        # charge conjugation: (G, F) -> (F, G) with kappa -> -kappa
        G, F, dG, dF = F, G, dF, dG
    return CavityBasis(kappa, float(cavity_radius), basis_size, t, r, w, G, F, dG, dF)


@dataclass(frozen=True, eq=False)
class CavitySpectrum:
    """Complete discrete spectrum of one kappa channel; states are basis coefficient vectors."""

    kappa: int
    cavity_radius: float
    basis_size: int
    energies: np.ndarray
    states: np.ndarray  # columns are S-orthonormal coefficient vectors
    basis: CavityBasis
    potential_tag: str = ""

    @property
    def levels(self):
        return list(zip(self.energies, self.states.T))

    def gram(self) -> np.ndarray:
        return self.states.T @ self.basis.overlap() @ self.states

    def sign_projector(self) -> np.ndarray:
        """sum_n sign(E_n) c_n c_n^T, paired by energy magnitude before summation."""
        s = np.sign(self.energies)
        order = np.argsort(np.abs(self.energies), kind="stable")
        c = self.states[:, order]
        return (c * s[order]) @ c.T

    def signed_density(self, projector: np.ndarray | None = None) -> np.ndarray:
        """sum_n sign(E_n) (G_n^2 + F_n^2) at the basis quadrature nodes."""
        p = self.sign_projector() if projector is None else projector
        bs = self.basis
        return np.einsum("aq,ab,bq->q", bs.G, p, bs.G) + np.einsum("aq,ab,bq->q", bs.F, p, bs.F)

    def radial_components(self, index: int):
        c = self.states[:, index]
        return c @ self.basis.G, c @ self.basis.F


def cavity_spectrum(potential: Callable | None, kappa: int, basis_size: int = 60, cavity_radius: float = 5.0,
                    breakpoints: Sequence[float] = (), first_knot: float = 1e-6, tag: str = "",
                    basis: CavityBasis | None = None) -> CavitySpectrum:
    """Discrete spectrum of the radial Dirac operator with potential energy ``potential``."""
    bs = basis or build_basis(kappa, basis_size, cavity_radius, breakpoints, first_knot)
    v = np.zeros_like(bs.r) if potential is None else np.asarray(potential(bs.r), dtype=float)
    e, c = eigh(bs.hamiltonian(v), bs.overlap())
    spec = CavitySpectrum(kappa, bs.cavity_radius, bs.basis_size, e, c, bs, tag or ("free" if potential is None else "V"))
    if potential is None:
        inside = np.abs(e) < 1.0 - 1e-10
        if np.any(inside):
            raise SpuriousStateError(f"free spectrum has {int(inside.sum())} levels inside the gap for kappa={kappa}: "
                                     f"{e[inside][:4]}")
    return spec


def free_symmetry_defect(spec: CavitySpectrum) -> float:
    """Largest relative mismatch between sorted positive and negated negative levels."""
    e = spec.energies
    pos = np.sort(e[e > 0])
    neg = np.sort(-e[e < 0])
    m = min(pos.size, neg.size)
    return float(np.max(np.abs(pos[:m] - neg[:m]) / pos[:m])) if m else math.inf
