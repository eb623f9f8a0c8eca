"""Uehling kernel, uniform-sphere Uehling density and Uehling potentials.

Charge densities are number densities in units of the proton charge
(a nucleus integrates to +Z).  Potentials are electron potential
energies in natural units, so the potential generated by a density n is

    U(r) = alpha * int dr' 4 pi r'^2 n(r') f(r, r'),

with the radial Uehling kernel

    f(r, r') = -(alpha / (3 pi r')) (1 / 2r) [chi_2(2|r - r'|) - chi_2(2(r + r'))].
"""

from __future__ import annotations

import math

import numpy as np

from .chi import chi, chi_difference, chi_fast
from .constants import ALPHA
from .grid import RadialFunction, RadialGrid, gauss_panels
from .nuclear import NuclearModel

KERNEL_CLAMP = 1e-9
_CHUNK = 2_000_000


def uehling_kernel_f(r, r_prime, alpha: float = ALPHA):
    """Closed-form radial Uehling kernel; broadcasts over r and r_prime."""
    r = np.asarray(r, dtype=float)
    rp = np.asarray(r_prime, dtype=float)
    if np.any(r <= 0.0) or np.any(rp <= 0.0):
        raise ValueError("Uehling kernel needs positive radii")
    lo = 2.0 * np.maximum(np.abs(r - rp), KERNEL_CLAMP)
    hi = 2.0 * (r + rp)
    diff = chi_difference(2, lo, hi)
    return -(alpha / (3.0 * math.pi)) * diff / (2.0 * r * rp)


def uehling_kernel_theta(r: float, r_prime: float, alpha: float = ALPHA) -> float:
    """Kernel from its xi-integral (Theta-function) form; slow reference evaluation."""
    from scipy import integrate

    rg, rl = max(r, r_prime), min(r, r_prime)

    def integrand(xi):
        w = math.sqrt(1.0 - 1.0 / (xi * xi)) * (1.0 + 0.5 / (xi * xi))
        # e^{-2 rg xi} sinh(2 rl xi) written without overflow
        s = 0.5 * (math.exp(-2.0 * (rg - rl) * xi) - math.exp(-2.0 * (rg + rl) * xi))
        return w * s / (rg * xi) / (2.0 * rl * xi)

    val, _ = integrate.quad(integrand, 1.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=400)
    return -(2.0 * alpha / (3.0 * math.pi)) * val


def point_uehling_potential(Z: int, r, alpha: float = ALPHA):
    """Uehling potential of a point charge Z: -(2 alpha Z alpha / 3 pi r) chi_1(2r)."""
    r = np.asarray(r, dtype=float)
    return -(2.0 * alpha * Z * alpha / (3.0 * math.pi)) * chi_fast(1, 2.0 * r) / r


def uehling_density_uniform_sphere(model: NuclearModel, r, alpha: float = ALPHA):
    """Renormalised Uehling vacuum-polarisation density induced by a uniform sphere.

    Logarithmically singular at r = R0; a radius exactly at R0 is moved to
    R0 (1 - 1e-9).
    """
    if model.shape != "uniform_sphere":
        raise ValueError("closed-form Uehling density needs a uniform_sphere model")
    R0 = model.R0
    r = np.array(r, dtype=float, ndmin=1)
    r = np.where(r == R0, R0 * (1.0 - 1e-9), r)
    d = 2.0 * np.abs(R0 - r)
    s = 2.0 * (R0 + r)
    inside = r < R0
    # sign(R0 - r) chi_1(d) - chi_1(s)
    t1 = np.where(inside, chi_difference(1, d, s), -chi_fast(1, d) - chi_fast(1, s))
    t2 = chi_difference(2, d, s) / (2.0 * R0)
    pref = model.Z / (4.0 * math.pi * R0 * R0) * alpha / (math.pi * r)
    return pref * (t1 + t2)


def uehling_density_uniform_sphere_xi(model: NuclearModel, r: float, alpha: float = ALPHA) -> float:
    """Same density from its xi-integral form (reference evaluation)."""
    from scipy import integrate

    R0 = model.R0

    def w(xi):
        return math.sqrt(1.0 - 1.0 / (xi * xi)) * (1.0 + 0.5 / (xi * xi)) / xi

    if r < R0:
        def integrand(xi):
            # sinh(2 r xi) e^{-2 R0 xi}
            sh = 0.5 * (math.exp(-2.0 * (R0 - r) * xi) - math.exp(-2.0 * (R0 + r) * xi))
            return w(xi) * (1.0 + 1.0 / (2.0 * R0 * xi)) * sh
    else:
        def integrand(xi):
            # [cosh(2 R0 xi) - sinh(2 R0 xi)/(2 R0 xi)] e^{-2 r xi}
            ep = math.exp(-2.0 * (r - R0) * xi)
            em = math.exp(-2.0 * (r + R0) * xi)
            return -w(xi) * (0.5 * (ep + em) - 0.5 * (ep - em) / (2.0 * R0 * xi))

    val, _ = integrate.quad(integrand, 1.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=400)
    return 3.0 * model.Z / (4.0 * math.pi * R0**3) * (2.0 * alpha / (3.0 * math.pi)) * (R0 / r) * val


def induced_charge_interior(model: NuclearModel, alpha: float = ALPHA) -> float:
    """Uehling charge (units of e) inside the uniform sphere, from the chi closed form."""
    if model.shape != "uniform_sphere":
        raise ValueError("closed-form interior charge needs a uniform_sphere model")
    R0 = model.R0
    z = 4.0 * R0
    bracket = (chi(2, 0.0) + chi(2, z) + chi(3, z) / R0
               + (chi(4, z) - chi(4, 0.0)) / (2.0 * R0) ** 2)
    return model.Z / (2.0 * R0) * (alpha / math.pi) * bracket


def uehling_density_quadrature(model: NuclearModel, order: int = 16, r_max: float = 40.0):
    """Gauss panels adapted to the uniform-sphere Uehling density (graded towards R0)."""
    R0 = model.R0
    edges = [0.0, R0, 2 * R0, 8 * R0, 0.5, 2.0, 6.0, 15.0, r_max]
    edges = sorted(set(e for e in edges if e <= r_max))
    return gauss_panels(edges, order=order, grade_to=(R0,), ratio=0.3, depth=30)


def uehling_potential_from_sources(r_src, w_src, n_src, r_target, alpha: float = ALPHA):
    """U(r) = alpha sum_j w_j 4 pi r_j^2 n_j f(r, r_j) at each target radius."""
    r_src = np.asarray(r_src, dtype=float)
    q = alpha * 4.0 * math.pi * np.asarray(w_src) * r_src**2 * np.asarray(n_src)
    keep = q != 0.0
    r_src, q = r_src[keep], q[keep]
    r_target = np.asarray(r_target, dtype=float)
    out = np.empty(r_target.shape)
    step = max(1, _CHUNK // max(r_src.size, 1))
    for a in range(0, r_target.size, step):
        rt = r_target[a:a + step]
        out[a:a + step] = uehling_kernel_f(rt[:, None], r_src[None, :], alpha) @ q
    return out


def uehling_potential_of_density(density: RadialFunction, grid: RadialGrid, alpha: float = ALPHA) -> RadialFunction:
    """Uehling potential of a spherically symmetric density tabulated on its own grid."""
    src = density.grid
    vals = uehling_potential_from_sources(src.points, src.integration_weights, density.values, grid.points, alpha)
    return RadialFunction(grid, vals, label="U_Ueh")


def _graded_unit_rule(order: int, depth: int, ratio: float = 0.3):
    """Gauss panels on [0, 1] graded geometrically towards 1."""
    return gauss_panels([0.0, 1.0], order=order, grade_to=(1.0,), ratio=ratio, depth=depth)


def _sphere_uehling(model: NuclearModel, r_target, alpha: float, order: int, depth: int):
    """Uehling potential of a uniform sphere with the source split at each target radius.

    The kernel has an integrable |r - r'| ln|r - r'| singularity at r' = r,
    so for targets inside the sphere [0, r] and [r, R0] get panels graded
    towards r; outside, [0, R0] is graded towards the surface.
    """
    R0 = model.R0
    n0 = 3.0 * model.Z / (4.0 * math.pi * R0**3)
    x, wx = _graded_unit_rule(order, depth)
    r_target = np.asarray(r_target, dtype=float)
    out = np.empty(r_target.shape)
    step = max(1, _CHUNK // (2 * x.size))
    for a in range(0, r_target.size, step):
        rt = r_target[a:a + step, None]
        inside = rt < R0
        left = np.minimum(rt, R0)
        # [0, min(r, R0)] graded towards its right end; [r, R0] graded towards r
        src = [(left * x, left * wx), (rt + (R0 - rt) * (1.0 - x), (R0 - rt) * wx)]
        total = np.zeros(rt.shape[0])
        for k, (rs, ws) in enumerate(src):
            if k == 1:
                if not np.any(inside):
                    break
                rs = np.where(inside, rs, R0)
                ws = np.where(inside, ws, 0.0)
            q = alpha * 4.0 * math.pi * ws * rs**2 * n0
            total += np.sum(uehling_kernel_f(rt, rs, alpha) * q, axis=1)
        out[a:a + step] = total
    return out


def nuclear_uehling_potential(model: NuclearModel, grid: RadialGrid, alpha: float = ALPHA,
                              order: int = 8, depth: int = 24) -> RadialFunction:
    """First-order Uehling potential of an extended nucleus on ``grid``."""
    if model.shape == "point":
        return RadialFunction(grid, point_uehling_potential(model.Z, grid.points, alpha), label="V_Ueh[point]")
    if model.shape == "uniform_sphere":
        vals = _sphere_uehling(model, grid.points, alpha, order, depth)
    else:
        # shell of charge Z at R0: U(r) = alpha Z 4 pi R0^2 f(r, R0) / (4 pi R0^2)
        vals = alpha * model.Z * uehling_kernel_f(grid.points, model.R0, alpha)
    return RadialFunction(grid, vals, label=f"V_Ueh[{model.shape}]")


def uehling_in_uehling_potential(model: NuclearModel, grid: RadialGrid, alpha: float = ALPHA,
                                 order: int = 16) -> RadialFunction:
    """Uehling potential generated by the uniform-sphere Uehling density."""
    r_src, w_src = uehling_density_quadrature(model, order=order)
    n_src = uehling_density_uniform_sphere(model, r_src, alpha)
    vals = uehling_potential_from_sources(r_src, w_src, n_src, grid.points, alpha)
    return RadialFunction(grid, vals, label="U_UehUeh")


def uniform_sphere_uehling_closed(model: NuclearModel, r, alpha: float = ALPHA):
    """Uehling potential of a uniform sphere from chi_3 / chi_4 antiderivatives (reference)."""
    R0 = model.R0
    n0 = 3.0 * model.Z / (4.0 * math.pi * R0**3)

    def P(z):  # int z chi_2 dz
        return -z * chi(3, z) - chi(4, z)

    def Q(z):  # int chi_2 dz
        return -chi(3, z)

    def seg_minus(r, z0, z1):  # int_{z0}^{z1} (r/2 - z/4) chi_2 dz
        return 0.5 * r * (Q(z1) - Q(z0)) - 0.25 * (P(z1) - P(z0))

    def seg_plus(r, z0, z1):  # int_{z0}^{z1} (r/2 + z/4) chi_2 dz
        return 0.5 * r * (Q(z1) - Q(z0)) + 0.25 * (P(z1) - P(z0))

    out = []
    for rr in np.atleast_1d(r):
        if rr >= R0:
            first = seg_minus(rr, 2 * (rr - R0), 2 * rr)
        else:
            first = seg_minus(rr, 0.0, 2 * rr) + seg_plus(rr, 0.0, 2 * (R0 - rr))
        # int_0^{R0} r' chi_2(2(r + r')) dr' = (1/4) int z chi_2 - (r/2) int chi_2 over [2r, 2(r+R0)]
        second = 0.25 * (P(2 * (rr + R0)) - P(2 * rr)) - 0.5 * rr * (Q(2 * (rr + R0)) - Q(2 * rr))
        integral = first - second
        out.append(-(alpha * alpha * n0 * 4.0 * math.pi / (6.0 * math.pi * rr)) * integral)
    return np.array(out)
