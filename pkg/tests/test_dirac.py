import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpkit.cavity import (SpuriousStateError, build_basis, cavity_spectrum, free_symmetry_defect,
                          level_count)
from vpkit.constants import ALPHA
from vpkit.dirac import (BoundStateSearchError, analytic_coulomb_energy, apply_hamiltonian, bound_grid,
                         expected_nodes, parse_state, solve_bound_state, state_label)
from vpkit.grid import RadialFunction, build_grid
from vpkit.nuclear import NuclearModel, coulomb_potential

SPHERE_U = NuclearModel.from_rms(92, 5.8604)


def _point_state(Z, label, n=4000):
    n_p, kappa = parse_state(label)
    # hydrogen-like Z = 1 extends over ~1/(Z alpha) natural units
    g = bound_grid(NuclearModel(Z, "point"), n=n, r_max=60.0 / (Z * ALPHA) if Z < 10 else 60.0)
    return solve_bound_state(coulomb_potential(NuclearModel(Z, "point"), g), kappa, n_p - abs(kappa))


@pytest.mark.parametrize("label,expected", [("1s", (1, -1)), ("2s1/2", (2, -1)), ("2p_1/2", (2, 1)),
                                            ("2p₃/₂", (2, -2)), ("3d5/2", (3, -3)), ("4f5/2", (4, 3))])
def test_parse_state(label, expected):
    assert parse_state(label) == expected


@pytest.mark.parametrize("label", ["1p1/2", "2p", "2s3/2", "x", "2d3/2"])
def test_parse_state_rejects(label):
    with pytest.raises(ValueError):
        parse_state(label)


@given(n=st.integers(1, 4), data=st.data())
def test_state_label_round_trip(n, data):
    kappa = data.draw(st.sampled_from([k for k in range(-n, n) if k != 0]))
    assert parse_state(state_label(n, kappa)) == (n, kappa)


def test_analytic_energy_known_values():
    # 1s: sqrt(1 - (Z alpha)^2)
    assert analytic_coulomb_energy(92, 1, -1) == pytest.approx(math.sqrt(1 - (92 * ALPHA) ** 2), rel=1e-15)
    # 2s and 2p1/2 are degenerate for a point nucleus
    assert analytic_coulomb_energy(92, 2, -1) == pytest.approx(analytic_coulomb_energy(92, 2, 1), rel=1e-15)


def test_analytic_energy_rejects_impossible_levels():
    for args in [(92, 1, 1), (92, 1, -2), (140, 1, -1)]:
        with pytest.raises(ValueError):
            analytic_coulomb_energy(*args)


@pytest.mark.parametrize("Z", [1, 82, 92])
@pytest.mark.parametrize("label", ["1s", "2s", "2p1/2", "2p3/2"])
def test_shooting_matches_analytic(Z, label):
    n, kappa = parse_state(label)
    s = _point_state(Z, label)
    assert s.energy == pytest.approx(analytic_coulomb_energy(Z, n, kappa), rel=1e-10)


def test_extended_nucleus_less_bound():
    g = bound_grid(SPHERE_U)
    for label in ("1s", "2s", "2p1/2"):
        n, kappa = parse_state(label)
        e = solve_bound_state(coulomb_potential(SPHERE_U, g), kappa, n - abs(kappa)).energy
        assert e > analytic_coulomb_energy(92, n, kappa)


def test_finite_size_splits_2s_2p():
    g = bound_grid(SPHERE_U)
    v = coulomb_potential(SPHERE_U, g)
    e2s = solve_bound_state(v, -1, 1).energy
    e2p = solve_bound_state(v, 1, 1).energy
    assert e2s > e2p


@pytest.mark.parametrize("label", ["1s", "2s", "2p1/2"])
def test_state_norm_and_nodes(label):
    n, kappa = parse_state(label)
    g = bound_grid(SPHERE_U)
    s = solve_bound_state(coulomb_potential(SPHERE_U, g), kappa, n - abs(kappa))
    assert s.norm() == pytest.approx(1.0, abs=1e-12)
    assert s.nodes() == expected_nodes(n - abs(kappa), kappa)
    assert s.n_principal == n


def test_hamiltonian_residual():
    g = bound_grid(SPHERE_U, n=8000)
    v = coulomb_potential(SPHERE_U, g)
    s = solve_bound_state(v, -1, 0)
    hg, hf = apply_hamiltonian(s, v)
    r = g.points
    sel = (r > 1e-4) & (r < 10.0)
    res = np.where(sel, (hg - s.energy * s.G.values) ** 2 + (hf - s.energy * s.F.values) ** 2, 0.0)
    # second-order finite differences bound the achievable residual
    assert math.sqrt(g.integrate(res)) < 1e-5


def test_grid_refinement_stable():
    e = []
    for n in (2000, 4000):
        g = bound_grid(SPHERE_U, n=n)
        e.append(solve_bound_state(coulomb_potential(SPHERE_U, g), -1, 0).energy)
    assert abs(e[1] - e[0]) < 1e-9 * abs(e[1])


def test_invalid_channel():
    g = bound_grid(SPHERE_U, n=500)
    v = coulomb_potential(SPHERE_U, g)
    with pytest.raises(ValueError):
        solve_bound_state(v, 0, 0)
    with pytest.raises(ValueError):
        solve_bound_state(v, 1, 0)


def test_search_failure_reported():
    g = build_grid(1e-6, 30.0, 800)
    repulsive = RadialFunction(g, 0.5 * np.exp(-g.points))
    with pytest.raises(BoundStateSearchError):
        solve_bound_state(repulsive, -1, 0)


# cavity spectra


@pytest.mark.parametrize("kappa", [-1, 1, -2, 2])
def test_free_cavity_spectrum_has_gap(kappa):
    spec = cavity_spectrum(None, kappa, basis_size=40)
    assert np.all(np.abs(spec.energies) > 1.0)
    assert spec.energies.size == level_count(kappa, 40)


@pytest.mark.parametrize("kappa", [-1, 2])
def test_cavity_gram_is_identity(kappa):
    spec = cavity_spectrum(SPHERE_U.potential_values, kappa, basis_size=40, breakpoints=SPHERE_U.breakpoints)
    gram = spec.gram()
    assert np.max(np.abs(gram - np.eye(gram.shape[0]))) < 1e-10


@pytest.mark.parametrize("kappa", [-3, -1, 1, 3])
def test_level_count(kappa):
    assert build_basis(kappa, 30).G.shape[0] == level_count(kappa, 30)


@pytest.mark.parametrize("kappa", [1, 2])
def test_charge_conjugation_mirror(kappa):
    V = SPHERE_U.potential_values
    a = cavity_spectrum(V, kappa, basis_size=40, breakpoints=SPHERE_U.breakpoints).energies
    b = cavity_spectrum(lambda r: -V(r), -kappa, basis_size=40, breakpoints=SPHERE_U.breakpoints).energies
    assert np.allclose(np.sort(a), np.sort(-b), rtol=1e-8, atol=0)


def test_free_symmetry_between_paired_channels():
    a = cavity_spectrum(None, -1, basis_size=40)
    b = cavity_spectrum(None, 1, basis_size=40)
    assert np.allclose(np.sort(a.energies), np.sort(-b.energies), rtol=1e-10, atol=0)
    assert np.allclose(a.signed_density() + b.signed_density(), 0.0, atol=1e-8 * np.max(np.abs(a.signed_density())))


def test_single_channel_free_spectrum_not_mirror_symmetric():
    # clamped walls: positive levels follow G(R) = 0, negative ones F(R) = 0
    assert free_symmetry_defect(cavity_spectrum(None, -1, basis_size=40)) > 1e-3


def test_basis_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_basis(0)
    with pytest.raises(ValueError):
        build_basis(-1, 10)
    with pytest.raises(ValueError):
        build_basis(-1, 30, cavity_radius=-1.0)


def test_spurious_state_error_is_runtime_error():
    assert issubclass(SpuriousStateError, RuntimeError)


@pytest.mark.parametrize("label", ["1s", "2s", "2p1/2"])
def test_cavity_matches_shooting(label):
    n, kappa = parse_state(label)
    g = bound_grid(SPHERE_U)
    shoot = solve_bound_state(coulomb_potential(SPHERE_U, g), kappa, n - abs(kappa)).energy
    # a large cavity so the levels are not confined; the wide knot spacing then needs 90 splines
    spec = cavity_spectrum(SPHERE_U.potential_values, kappa, basis_size=90, cavity_radius=40.0,
                           breakpoints=SPHERE_U.breakpoints)
    bound = np.sort(spec.energies[(spec.energies > 0) & (spec.energies < 1)])
    idx = n - abs(kappa) - (1 if kappa > 0 else 0)
    assert bound[idx] == pytest.approx(shoot, rel=1e-6)
