import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpkit.constants import ALPHA
from vpkit.grid import build_grid
from vpkit.nuclear import NuclearModel, UnsupportedModelError, charge_density, coulomb_potential, far_field_charge

U_RMS = 5.8604


@pytest.fixture(scope="module")
def uranium():
    return NuclearModel.from_rms(92, U_RMS)


def test_uniform_sphere_radius_from_rms(uranium):
    assert uranium.R0 == pytest.approx(0.019591, rel=1e-4)
    assert uranium.R0 * 386.15926796 == pytest.approx(7.5653, rel=1e-4)


def test_shell_radius_equals_rms(uranium):
    shell = uranium.with_shape("spherical_shell")
    assert shell.R0 == pytest.approx(U_RMS / 386.15926796, rel=1e-15)


def test_uniform_density_normalisation(uranium):
    rho0 = uranium.density_values(0.0)
    assert rho0 * 4 * math.pi * uranium.R0**3 / 3 == pytest.approx(92, rel=1e-10)


def test_uniform_density_zero_outside(uranium):
    r = uranium.R0 * np.array([1.0 + 1e-12, 1.5, 10.0])
    assert np.all(uranium.density_values(r) == 0.0)


@pytest.mark.parametrize("shape", ["uniform_sphere", "spherical_shell"])
@pytest.mark.parametrize("Z", [1, 82, 92])
def test_charge_density_total_charge(shape, Z):
    m = NuclearModel.from_rms(Z, U_RMS, shape)
    g = build_grid(1e-7, 5.0, 2000, breakpoints=m.breakpoints)
    rho = charge_density(m, g)
    assert rho.integrate(4 * math.pi * g.points**2) == pytest.approx(Z, rel=1e-10)


def test_point_model_has_no_density():
    g = build_grid(1e-6, 1.0, 100)
    with pytest.raises(UnsupportedModelError):
        charge_density(NuclearModel(1, "point"), g)


@pytest.mark.parametrize("kw", [dict(Z=0), dict(Z=92, shape="ellipsoid", R0=0.02), dict(Z=92, R0=0.0)])
def test_invalid_models(kw):
    with pytest.raises(ValueError):
        NuclearModel(**kw)


def test_point_coulomb_value():
    g = build_grid(1e-3, 2.0, 64, breakpoints=(1.0,))
    v = coulomb_potential(NuclearModel(1, "point"), g)
    assert v(1.0) == pytest.approx(-ALPHA, rel=1e-15)


@pytest.mark.parametrize("shape", ["uniform_sphere", "spherical_shell"])
def test_continuity_at_radius(uranium, shape):
    m = uranium.with_shape(shape)
    R = m.R0
    inner = m.potential_values(R * (1 - 1e-15))
    outer = m.potential_values(R * (1 + 1e-15))
    assert inner == pytest.approx(-92 * ALPHA / R, rel=1e-12)
    assert outer == pytest.approx(-92 * ALPHA / R, rel=1e-12)


def test_uniform_sphere_central_value():
    m = NuclearModel(92, "uniform_sphere", 0.019591)
    assert m.potential_values(0.0) == pytest.approx(-1.5 * 92 * ALPHA / 0.019591, rel=1e-12)
    assert m.potential_values(0.0) == pytest.approx(-51.41, rel=1e-3)


def test_poisson_consistency(uranium):
    """(1/r) d^2(r V)/dr^2 = 4 pi alpha rho inside the sphere."""
    R = uranium.R0
    r = np.linspace(0.05, 0.9, 50) * R
    h = 1e-4 * R
    rv = lambda x: x * uranium.potential_values(x)  # noqa: E731
    lap = (rv(r + h) - 2 * rv(r) + rv(r - h)) / (h * h) / r
    assert np.allclose(lap, 4 * math.pi * ALPHA * uranium.density_values(r), rtol=1e-4)


@settings(max_examples=50, deadline=None)
@given(Z=st.integers(1, 120), R0=st.floats(1e-3, 0.05), x=st.floats(2.0, 1e4),
       shape=st.sampled_from(["uniform_sphere", "spherical_shell"]))
def test_far_field(Z, R0, x, shape):
    m = NuclearModel(Z, shape, R0)
    r = x * R0
    assert r * m.potential_values(r) == pytest.approx(-Z * ALPHA, rel=1e-12)


def test_far_field_charge_of_grid(uranium):
    g = build_grid(1e-7, 60.0, 500, breakpoints=uranium.breakpoints)
    assert far_field_charge(coulomb_potential(uranium, g)) == pytest.approx(92, rel=1e-14)
