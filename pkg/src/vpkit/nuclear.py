"""Nuclear charge distributions and their bare Coulomb potentials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constants import ALPHA, DEFAULT, PhysicalConstants, fm_to_natural
from .grid import RadialFunction, RadialGrid

SHAPES = ("point", "uniform_sphere", "spherical_shell")


class UnsupportedModelError(ValueError):
    pass


@dataclass(frozen=True)
class NuclearModel:
    """Spherical nucleus of charge Z.

    ``R0`` is the model radius in natural units: the sphere radius for
    ``uniform_sphere`` and the shell radius for ``spherical_shell``.
    """

    Z: int
    shape: str = "uniform_sphere"
    R0: float = 0.0
    rms_fm: Optional[float] = None

    def __post_init__(self):
        if int(self.Z) != self.Z or self.Z < 1:
            raise ValueError(f"Z must be a positive integer, got {self.Z}")
        if self.shape not in SHAPES:
            raise ValueError(f"unknown nuclear shape {self.shape!r}")
        if self.shape != "point" and not self.R0 > 0.0:
            raise ValueError("extended nuclear models need R0 > 0")

    @classmethod
    def from_rms(cls, Z: int, rms_fm: float, shape: str = "uniform_sphere",
                 constants: PhysicalConstants = DEFAULT) -> "NuclearModel":
        rms = fm_to_natural(rms_fm, constants)
        if shape == "uniform_sphere":
            R0 = math.sqrt(5.0 / 3.0) * rms
        elif shape == "spherical_shell":
            R0 = rms
        elif shape == "point":
            R0 = 0.0
        else:
            raise ValueError(f"unknown nuclear shape {shape!r}")
        return cls(int(Z), shape, R0, rms_fm)

    def with_shape(self, shape: str, constants: PhysicalConstants = DEFAULT) -> "NuclearModel":
        """Same nucleus (same rms radius) described by another shape."""
        if self.rms_fm is None:
            raise ValueError("changing shape needs the rms radius")
        return NuclearModel.from_rms(self.Z, self.rms_fm, shape, constants)

    @property
    def breakpoints(self) -> tuple:
        return () if self.shape == "point" else (self.R0,)

    def potential_values(self, r, alpha: float = ALPHA):
        """Electron potential energy V^C(r) (negative, attractive)."""
        r = np.asarray(r, dtype=float)
        za = self.Z * alpha
        with np.errstate(divide="ignore"):
            out = -za / r
        if self.shape == "uniform_sphere":
            inside = r < self.R0
            x = r[inside] / self.R0 if r.ndim else r / self.R0
            if r.ndim:
                out[inside] = -za / (2.0 * self.R0) * (3.0 - x * x)
            elif inside:
                out = -za / (2.0 * self.R0) * (3.0 - x * x)
        elif self.shape == "spherical_shell":
            if r.ndim:
                out[r < self.R0] = -za / self.R0
            elif r < self.R0:
                out = -za / self.R0
        return out

    def density_values(self, r):
        """Nuclear number density (charge in units of e) at radii ``r``."""
        r = np.asarray(r, dtype=float)
        if self.shape == "uniform_sphere":
            rho0 = 3.0 * self.Z / (4.0 * math.pi * self.R0**3)
            return np.where(r < self.R0, rho0, 0.0)
        raise UnsupportedModelError(f"no pointwise density for shape {self.shape!r}")


def coulomb_potential(model: NuclearModel, grid: RadialGrid, alpha: float = ALPHA) -> RadialFunction:
    """Bare Coulomb potential energy of an electron, tabulated with an exact evaluator."""

    def exact(r):
        return model.potential_values(r, alpha)

    return RadialFunction(grid, exact(grid.points), exact=exact, label=f"V_C[{model.shape}]")


def charge_density(model: NuclearModel, grid: RadialGrid) -> RadialFunction:
    """Nuclear charge density on ``grid`` normalised to exactly Z on that grid.

    The uniform sphere is constant inside R0 and zero outside; the node at
    R0 (if present) absorbs the quadrature residue.  A spherical shell is
    represented as the full charge placed on the grid node closest to R0.
    """
    if model.shape == "point":
        raise UnsupportedModelError("point nucleus has no density representation")
    r = grid.points
    w4 = grid.integration_weights * 4.0 * math.pi * r * r
    if model.shape == "uniform_sphere":
        vals = np.array(model.density_values(r), dtype=float)
        k = int(np.argmin(np.abs(r - model.R0)))
        vals[k] = 0.0
        vals[k] = (model.Z - np.dot(w4, vals)) / w4[k]
    else:
        vals = np.zeros_like(r)
        k = int(np.argmin(np.abs(r - model.R0)))
        vals[k] = model.Z / w4[k]
    return RadialFunction(grid, vals, label=f"rho_nuc[{model.shape}]")


def far_field_charge(potential: RadialFunction, alpha: float = ALPHA) -> float:
    """Effective Z seen at the outer edge of the grid, -r V(r) / alpha."""
    return float(-potential.grid.r_max * potential.values[-1] / alpha)
