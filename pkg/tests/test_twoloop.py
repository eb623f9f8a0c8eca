import csv
import io
import json
import math

import numpy as np
import pytest

from vpkit.constants import DEFAULT
from vpkit.dirac import parse_state
from vpkit.greens import ConvergenceError, zwk
from vpkit.grid import RadialFunction
from vpkit.nuclear import NuclearModel
from vpkit.twoloop import (CONVERGENCE_PARAMETERS, CSV_COLUMNS, CavitySpec, EnergyShiftReport, KQuadrature, Numerics,
                           build_potential_set, convergence_study, f2_shift, f2_shift_spectral, parameter_used,
                           reports_to_csv, scaling_estimate, solve_state, spectral_bracket, wk_in_uehling_shift,
                           zero_vp_set)
from vpkit.uehling import uehling_potential_of_density


def _report(**kw):
    base = dict(Z=92, models={}, state_label="1s1/2", f1_uehling_eV=-0.1152, f1_wk_eV=0.004, f2_eV=0.0277,
                scaling_estimate_eV=0.006, first_order_uehling_eV=-93.6)
    return EnergyShiftReport(**{**base, **kw})


def test_potential_set_invariants(contexts):
    for ctx in contexts.values():
        p = ctx.potentials
        assert p.bookkeeping_residual() <= 1e-14
        assert p.perturbation_ratio() < 0.05
        assert p.includes_wk
        r = p.grid.points
        assert np.array_equal(p.v_vp_ren.values, p.v_uehling.values + p.v_wk.values)
        x = np.array([0.5 * ctx.sphere.R0, 0.3, 2.0])
        assert np.allclose(p.v_total(x), p.v_coulomb(x) + p.v_vp_ren(x), rtol=1e-14, atol=0)
        assert np.all(p.v_uehling.values[r < 1.0] < 0)


def test_zero_vp_set(contexts):
    z = zero_vp_set(contexts["U"].potentials)
    assert not np.any(z.v_vp_ren.values)
    assert np.array_equal(z.v_total.values, z.v_coulomb.values)


def test_potential_set_rejects_bad_input():
    with pytest.raises(ValueError):
        build_potential_set(NuclearModel(92, "point"))
    with pytest.raises(ValueError):
        build_potential_set(NuclearModel.from_rms(92, 5.8604), wk=None, include_wk=True)


def test_wk_in_uehling_order_swap(contexts):
    """<A| U[n_WK] |A> equals the WK charge in the Uehling potential of the electron density."""
    ctx = contexts["U"]
    rep_state = solve_state(ctx.sphere, "1s", ctx.bound_grid)
    direct = wk_in_uehling_shift(rep_state, ctx.wk) / DEFAULT.electron_rest_energy_eV
    g = rep_state.G.grid
    r = g.points
    # electron number density (negative charge) for the proton-positive convention
    electron = RadialFunction(g, -rep_state.density / (4 * math.pi * r * r))
    wr = ctx.wk.grid.points
    u_e = uehling_potential_of_density(electron, ctx.wk.grid)
    swapped = -ctx.wk.grid.integrate(4 * math.pi * wr * wr * ctx.wk.density.values * u_e.values)
    assert swapped == pytest.approx(direct, rel=1e-6)


def test_wk_in_uehling_two_code_paths(contexts, reports):
    ctx = contexts["U"]
    state = solve_state(ctx.sphere, "1s", ctx.bound_grid)
    fresh = wk_in_uehling_shift(state, ctx.wk)
    assert fresh == pytest.approx(reports[("U", "1s1/2")].f1_wk_eV, rel=1e-8)


def test_level_ordering(run_config, reports):
    for name in ("U", "Pb"):
        rows = [reports[(name, lb)] for lb in run_config.states]
        ueh = {parse_state(r.state_label): abs(r.f1_uehling_eV) for r in rows}
        assert ueh[(1, -1)] > ueh[(2, -1)] > ueh[(2, 1)]
        assert all(r.first_order_uehling_eV < 0 for r in rows)


def test_heavier_nucleus_larger_shift(reports):
    assert reports[("U", "1s1/2")].first_order_uehling_eV < reports[("Pb", "1s1/2")].first_order_uehling_eV


def test_report_total_is_sum_of_parts():
    rep = _report()
    assert rep.bookkeeping_ok()
    assert rep.total_eV == rep.f1_uehling_eV + rep.f1_wk_eV + rep.f2_eV
    assert rep.higher_order_eV == rep.f1_wk_eV + rep.f2_eV


def test_report_json_round_trip():
    rep = _report(diagnostics={"arr": np.arange(3), "x": np.float64(1.5)})
    d = json.loads(rep.to_json())
    assert d["total_eV"] == rep.total_eV
    assert d["diagnostics"]["arr"] == [0, 1, 2]
    assert d["sign_checks"] == {"f1_uehling_negative": True, "f1_wk_positive": True, "f2_negative": False}


def test_reports_to_csv_columns_and_precision():
    reps = [_report(), _report(Z=82, state_label="2s1/2", f1_uehling_eV=-0.009223)]
    text = reports_to_csv(reps, {92: "U", 82: "Pb"})
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1][:2] == ["U", "1s1/2"] and rows[2][:2] == ["Pb", "2s1/2"]
    assert float(rows[1][3]) == reps[0].total_eV


def test_scaling_estimate_arithmetic():
    assert scaling_estimate(-0.006, -93.58, 92) == (-0.006 / 92) * -93.58
    with pytest.raises(ValueError):
        scaling_estimate(-0.006, -93.58, 0)


def test_numerics_doubled():
    n = Numerics()
    d = n.doubled("grid_points")
    assert (d.bound_points, d.wk_points) == (2 * n.bound_points, 2 * n.wk_points)
    assert d.kappa_max == n.kappa_max
    assert n.doubled("cavity_radius").cavity_radius == 2 * n.cavity_radius
    assert n.doubled("u_nodes").u_nodes == 2 * n.u_nodes


def test_parameter_used():
    assert not parameter_used("k_nodes", Numerics())
    assert parameter_used("k_nodes", Numerics(f2_method="spectral"))
    assert parameter_used("kappa_max", Numerics())


class _FakeContext:
    def __init__(self, numerics):
        self.n = numerics

    def report(self, label):
        # f2 depends weakly on u_nodes, strongly on kappa_max
        f2 = 0.02 * (1 + 1e-4 * self.n.u_nodes / 64 + 0.05 * self.n.kappa_max / 10)
        return _report(state_label=label, f2_eV=f2)


def test_convergence_study_logic():
    out = convergence_study(_FakeContext, ["1s"], Numerics())
    assert set(out["parameters"]) == set(CONVERGENCE_PARAMETERS)
    assert out["parameters"]["u_nodes"]["passed"]
    assert not out["parameters"]["kappa_max"]["passed"]
    assert out["parameters"]["k_nodes"]["applicable"] is False
    assert out["parameters"]["k_nodes"]["max_relative_change"] == 0.0
    assert not out["passed"]
    json.dumps(out)


def test_unknown_f2_method(contexts):
    ctx = contexts["Pb"]
    with pytest.raises(ValueError):
        f2_shift(solve_state(ctx.sphere, "1s", ctx.bound_grid), ctx.potentials, method="magic")


def test_small_furry_zero(contexts):
    z = zero_vp_set(contexts["U"].potentials)
    q = np.linspace(0.1, 20.0, 7)
    bracket, (s_v, s_c, s_vp) = spectral_bracket(z, 1, q, CavitySpec(basis_size=30))
    assert np.max(np.abs(bracket)) <= 1e-10 * np.max(np.abs(s_v))


def test_spectral_route_smoke(contexts):
    ctx = contexts["Pb"]
    state = solve_state(ctx.sphere, "1s", ctx.bound_grid)
    out = f2_shift_spectral(state, ctx.potentials, kappa_max=1, k_quadrature=KQuadrature(20.0, 40, 4),
                            cavity=CavitySpec(basis_size=30), breakpoints=ctx.sphere.breakpoints)
    assert math.isfinite(out["value"]) and len(out["per_kappa"]) == 1


def test_k_quadrature_rule():
    x, w = KQuadrature(10.0, 40, 4).rule()
    assert w.sum() == pytest.approx(10.0, rel=1e-14)
    with pytest.raises(ValueError):
        KQuadrature(10.0, 41, 4).rule()


def test_zwk_reported(contexts, reports):
    ctx = contexts["Pb"]
    assert reports[("Pb", "1s1/2")].diagnostics["zwk"] == zwk(ctx.wk, ctx.shell)


def test_f2_density_converges_in_kappa(contexts):
    for ctx in contexts.values():
        assert ctx.f2_density().diagnostics["tail_ratio"] < 1.0


def test_convergence_error_carries_diagnostics():
    e = ConvergenceError("x", {"a": 1})
    assert e.diagnostics == {"a": 1}
