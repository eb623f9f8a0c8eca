"""Two-loop vacuum-polarisation (loop-inside-loop) corrections to bound levels.

The correction splits into

    F1,Ueh  Uehling potential of the Uehling charge of the nucleus,
    F1,WK   Uehling potential of the Wichmann-Kroll charge,
    F2      vacuum charge of the dressed propagator in V = V^C + V^VP
            with the one-potential pieces removed:

                n_F2 = n[V] - n[V^C] - n[V^VP].

Only odd orders in the potential survive the sum over both signs of
kappa, so n_F2 starts at third order (V^C V^C V^VP) and is finite.  It is
evaluated from the same imaginary-energy Green functions as the WK
density (``method="resolvent"``) or from discrete cavity spectra in
momentum space (``method="spectral"``).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .cavity import build_basis, cavity_spectrum
from .constants import ALPHA, DEFAULT, PhysicalConstants
from .dirac import BoundState, bound_grid, parse_state, solve_bound_state, state_label
from .greens import (NOISE_FLOOR, STEP_RESOLUTION_LIMIT, TAIL_RATIO_MAX, ChargeDensity, ConvergenceError,
                     electrostatic_potential, geometric_tail, odd_traces, u_quadrature, wk_density, wk_grid,
                     wk_potential, zwk)
from .grid import RadialFunction, RadialGrid
from .nuclear import NuclearModel, coulomb_potential
from .uehling import nuclear_uehling_potential, uehling_in_uehling_potential, uehling_potential_of_density

PERTURBATION_RATIO_LIMIT = 0.05
BOOKKEEPING_TOLERANCE = 1e-14


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True, eq=False)
class VPPotentialSet:
    """Potentials entering the F2 subtraction, tabulated on one grid.

    ``v_coulomb`` keeps its analytic evaluator; ``v_total`` evaluates the
    Coulomb part analytically and the vacuum-polarisation part by
    interpolation, so both off-grid evaluations stay consistent.
    """

    v_coulomb: RadialFunction
    v_uehling: RadialFunction
    v_wk: RadialFunction | None
    v_vp_ren: RadialFunction
    v_total: RadialFunction

    @property
    def grid(self) -> RadialGrid:
        return self.v_coulomb.grid

    @property
    def includes_wk(self) -> bool:
        return self.v_wk is not None

    def bookkeeping_residual(self) -> float:
        """max |V - V^C - V^VP| relative to max |V^C| on the grid."""
        d = self.v_total.values - self.v_coulomb.values - self.v_vp_ren.values
        return float(np.max(np.abs(d)) / np.max(np.abs(self.v_coulomb.values)))

    def perturbation_ratio(self, r_max: float = 1.0) -> float:
        """max |V^VP / V^C| for r < r_max."""
        r = self.grid.points
        sel = r < r_max
        return float(np.max(np.abs(self.v_vp_ren.values[sel] / self.v_coulomb.values[sel])))

    def validate(self):
        if self.bookkeeping_residual() > BOOKKEEPING_TOLERANCE:
            raise ValueError(f"V != V^C + V^VP: residual {self.bookkeeping_residual():.3g}")
        ratio = self.perturbation_ratio()
        if not ratio < PERTURBATION_RATIO_LIMIT:
            raise ValueError(f"vacuum-polarisation potential not small against V^C inside r < 1 (ratio {ratio:.3g})")
        return self


def _combined(v_coulomb: RadialFunction, v_vp: RadialFunction, label: str) -> RadialFunction:
    exact_c = v_coulomb.exact or v_coulomb.interpolate

    def exact(r):
        return exact_c(r) + v_vp.interpolate(r)

    return RadialFunction(v_coulomb.grid, v_coulomb.values + v_vp.values, exact=exact, label=label)


def build_potential_set(model: NuclearModel, wk: ChargeDensity | None = None, grid: RadialGrid | None = None,
                        include_wk: bool = True, alpha: float = ALPHA) -> VPPotentialSet:
    """V^C and V^VP_ren = Uehling(nucleus) [+ WK potential] on ``grid`` (default: the WK grid)."""
    if model.shape == "point":
        raise ValueError("the two-loop potentials need an extended nucleus")
    if grid is None:
        grid = wk.grid if wk is not None else wk_grid(model)
    v_c = coulomb_potential(model, grid, alpha)
    v_u = nuclear_uehling_potential(model, grid, alpha)
    v_w = None
    vp_vals = v_u.values
    if include_wk:
        if wk is None:
            raise ValueError("include_wk needs a Wichmann-Kroll density")
        v_w = wk_potential(wk, grid, alpha)
        vp_vals = v_u.values + v_w.values
    v_vp = RadialFunction(grid, vp_vals, label="V_VP_ren")
    return VPPotentialSet(v_c, v_u, v_w, v_vp, _combined(v_c, v_vp, "V_total")).validate()


def zero_vp_set(potentials: VPPotentialSet) -> VPPotentialSet:
    """The same set with V^VP_ren switched off (V = V^C)."""
    zero = potentials.v_coulomb.with_values(np.zeros(len(potentials.grid)), label="zero")
    v_c = potentials.v_coulomb
    return VPPotentialSet(v_c, zero, None, zero, _combined(v_c, zero, "V_total"))


# ---------------------------------------------------------------------------
# first-order pieces


def solve_state(model: NuclearModel, label: str, grid: RadialGrid | None = None, alpha: float = ALPHA) -> BoundState:
    """Bound state ``label`` in the bare Coulomb potential of ``model``."""
    n, kappa = parse_state(label)
    grid = grid or bound_grid(model)
    return solve_bound_state(coulomb_potential(model, grid, alpha), kappa, n - abs(kappa), alpha=alpha)


def _potential_on(state: BoundState, potential: RadialFunction | None, build):
    if potential is None:
        return build(state.G.grid)
    if potential.grid is not state.G.grid and not np.array_equal(potential.grid.points, state.G.grid.points):
        raise ValueError("bound state and potential live on different grids")
    return potential


def first_order_uehling_shift(state: BoundState, model: NuclearModel, alpha: float = ALPHA,
                              constants: PhysicalConstants = DEFAULT, potential: RadialFunction | None = None) -> float:
    """<A| V_Ueh[nucleus] |A> in eV; ``potential`` may supply V_Ueh already tabulated on the state grid."""
    pot = _potential_on(state, potential, lambda g: nuclear_uehling_potential(model, g, alpha))
    return state.expectation(pot) * constants.electron_rest_energy_eV


def uehling_in_uehling_shift(state: BoundState, model: NuclearModel, alpha: float = ALPHA,
                             constants: PhysicalConstants = DEFAULT, potential: RadialFunction | None = None) -> float:
    """<A| U_Ueh[n_Ueh] |A> in eV for a uniform-sphere nucleus."""
    if model.shape != "uniform_sphere":
        raise ValueError("Uehling-in-Uehling needs the uniform-sphere Uehling density")
    pot = _potential_on(state, potential, lambda g: uehling_in_uehling_potential(model, g, alpha))
    return state.expectation(pot) * constants.electron_rest_energy_eV


def wk_in_uehling_shift(state: BoundState, wk: ChargeDensity, alpha: float = ALPHA,
                        constants: PhysicalConstants = DEFAULT, potential: RadialFunction | None = None) -> float:
    """<A| U_Ueh[n_WK] |A> in eV."""
    pot = _potential_on(state, potential, lambda g: uehling_potential_of_density(wk.density, g, alpha))
    return state.expectation(pot) * constants.electron_rest_energy_eV


def scaling_estimate(zwk_charge: float, first_order_uehling: float, Z: int) -> float:
    """(Z^WK / Z) times the first-order Uehling shift."""
    if Z < 1:
        raise ValueError("Z must be positive")
    est = (zwk_charge / Z) * first_order_uehling
    if zwk_charge < 0 and first_order_uehling < 0 and not est > 0:
        raise ArithmeticError("product of two negative numbers is not positive")
    return est


# ---------------------------------------------------------------------------
# F2: resolvent route


@dataclass(frozen=True, eq=False)
class F2Density:
    """n_F2 on the potential grid with per-|kappa| pieces."""

    density: RadialFunction
    partial_waves: np.ndarray
    kappa_max: int
    u_nodes: int
    tail: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def f2_bracket_resolvent(potentials: VPPotentialSet, k: int, u_nodes: int = 64, u_scale_per_kappa: float = 2.0):
    """Odd trace bracket T[V] - T[V^C] - T[V^VP] for |kappa| = k, shape (n_r, n_u), and the u quadrature."""
    r = potentials.grid.points
    un, uw = u_quadrature(u_nodes, u_scale_per_kappa * k)
    energies = 1j * un
    parts = [odd_traces(v, float(v(r[0])), k, energies, r, (1.0,))[0]
             for v in (potentials.v_total, potentials.v_coulomb, potentials.v_vp_ren)]
    return parts[0] - parts[1] - parts[2], parts, (un, uw)


def f2_partial_wave(potentials: VPPotentialSet, k: int, u_nodes: int = 64, u_scale_per_kappa: float = 2.0):
    """n_F2 contribution of |kappa| = k (both signs, multiplicity included)."""
    r = potentials.grid.points
    bracket, _, (un, uw) = f2_bracket_resolvent(potentials, k, u_nodes, u_scale_per_kappa)
    dr = np.diff(r)
    local = np.maximum(np.append(dr, dr[-1]), np.insert(dr, 0, dr[0]))
    lam = np.sqrt(1.0 + un**2)
    bracket = np.where(local[:, None] * lam[None, :] > STEP_RESOLUTION_LIMIT, 0.0, bracket)
    return (2.0 * k / (4.0 * math.pi * r * r)) * (bracket @ uw) / math.pi


def f2_density(potentials: VPPotentialSet, kappa_max: int = 10, u_nodes: int = 64,
               extrapolate: bool = True) -> F2Density:
    if kappa_max < 1:
        raise ValueError("kappa_max must be >= 1")
    grid = potentials.grid
    terms = np.array([f2_partial_wave(potentials, k, u_nodes) for k in range(1, kappa_max + 1)])
    r2 = 4.0 * math.pi * grid.points**2
    norms, ratios, q = geometric_tail([grid.integrate(r2 * np.abs(t)) for t in terms])
    floor = bool(norms[-1] < NOISE_FLOOR * norms[0])
    tail = np.zeros(len(grid))
    if extrapolate and kappa_max >= 2 and 0.0 < q < TAIL_RATIO_MAX:
        tail = terms[-1] * q / (1.0 - q)
    diag = {"partial_wave_norms": norms.tolist(), "successive_ratios": ratios.tolist(), "tail_ratio": q,
            "below_noise_floor": floor, "partial_wave_charges": [grid.integrate(r2 * t) for t in terms]}
    dens = RadialFunction(grid, terms.sum(axis=0) + tail, label="rho_F2")
    return F2Density(dens, terms, kappa_max, u_nodes, tail, diag)


def f2_shift_from_density(state: BoundState, f2: F2Density, alpha: float = ALPHA,
                          constants: PhysicalConstants = DEFAULT) -> dict:
    """Energy shift (eV) of ``f2`` with per-|kappa| contributions."""
    grid = state.G.grid
    ev = constants.electron_rest_energy_eV

    def energy(vals):
        return state.expectation(electrostatic_potential(f2.density.with_values(vals), grid, alpha)) * ev

    per_kappa = [energy(t) for t in f2.partial_waves]
    tail = energy(f2.tail) if np.any(f2.tail) else 0.0
    return {"value": energy(f2.density.values), "per_kappa": per_kappa, "tail": tail}


# ---------------------------------------------------------------------------
# F2: spectral (cavity) route


@dataclass(frozen=True)
class KQuadrature:
    k_max: float = 40.0
    nodes: int = 400
    panels: int = 20

    def rule(self):
        if self.nodes % self.panels:
            raise ValueError("k nodes must be a multiple of the panel count")
        x, w = np.polynomial.legendre.leggauss(self.nodes // self.panels)
        edges = np.linspace(0.0, self.k_max, self.panels + 1)
        a, b = edges[:-1, None], edges[1:, None]
        return (0.5 * (a + b) + 0.5 * (b - a) * x).ravel(), (0.5 * (b - a) * w).ravel()


@dataclass(frozen=True)
class CavitySpec:
    basis_size: int = 60
    cavity_radius: float = 5.0
    first_knot: float = 1e-6


def _j0(x):
    return np.sinc(x / math.pi)


def bound_form_factor(state: BoundState, k) -> np.ndarray:
    """w_A(k) = int j0(k r) (G^2 + F^2) dr."""
    r = state.G.grid.points
    wd = state.G.grid.integration_weights * state.density
    return np.array([np.dot(_j0(kk * r), wd) for kk in np.atleast_1d(k)])


def spectral_channel_sums(potentials: VPPotentialSet, k: int, k_nodes, cavity: CavitySpec = CavitySpec(),
                          breakpoints: Sequence[float] = ()) -> np.ndarray:
    """S_X^kappa(q) = sum_n sign(E_n) <n| j0(q r) |n>; shape (3, 2, n_q) for X = V, V^C, V^VP and kappa = -k, +k."""
    out = np.empty((3, 2, np.size(k_nodes)))
    for j, kappa in enumerate((-k, k)):
        bs = build_basis(kappa, cavity.basis_size, cavity.cavity_radius, breakpoints, cavity.first_knot)
        j0 = _j0(np.outer(k_nodes, bs.r))
        for i, x in enumerate((potentials.v_total, potentials.v_coulomb, potentials.v_vp_ren)):
            out[i, j] = j0 @ (bs.w * cavity_spectrum(x, kappa, basis=bs).signed_density())
    return out


def spectral_bracket(potentials: VPPotentialSet, k: int, k_nodes, cavity: CavitySpec = CavitySpec(),
                     breakpoints: Sequence[float] = ()):
    """S_X(q) summed over kappa = +-k for X = V, V^C, V^VP; returns (bracket, (S_V, S_C, S_VP))."""
    s_v, s_c, s_vp = spectral_channel_sums(potentials, k, k_nodes, cavity, breakpoints).sum(axis=1)
    return s_v - s_c - s_vp, (s_v, s_c, s_vp)


def f2_shift_spectral(state: BoundState, potentials: VPPotentialSet, kappa_max: int = 10,
                      k_quadrature: KQuadrature = KQuadrature(), cavity: CavitySpec = CavitySpec(),
                      breakpoints: Sequence[float] = (), alpha: float = ALPHA,
                      constants: PhysicalConstants = DEFAULT) -> dict:
    """-(alpha/pi) int dq w_A(q) sum_kappa 2|kappa| [S_V - S_C - S_VP] in eV."""
    q, wq = k_quadrature.rule()
    wa = bound_form_factor(state, q)
    per_kappa = []
    for k in range(1, kappa_max + 1):
        bracket, _ = spectral_bracket(potentials, k, q, cavity, breakpoints)
        # 2|kappa| substates and the 1/2 of the symmetrised vacuum charge
        per_kappa.append(-(alpha / math.pi) * k * np.dot(wq * wa, bracket) * constants.electron_rest_energy_eV)
    _, ratios, r = geometric_tail(np.array(per_kappa)[:, None])
    tail = per_kappa[-1] * r / (1.0 - r) if kappa_max >= 2 and 0.0 < r < TAIL_RATIO_MAX else 0.0
    return {"value": float(sum(per_kappa) + tail), "per_kappa": per_kappa, "tail": tail,
            "k_max": k_quadrature.k_max, "k_nodes": k_quadrature.nodes,
            "basis_size": cavity.basis_size, "cavity_radius": cavity.cavity_radius}


def f2_shift(state: BoundState, potentials: VPPotentialSet, kappa_max: int = 10, method: str = "resolvent",
             u_nodes: int = 64, k_quadrature: KQuadrature = KQuadrature(), cavity: CavitySpec = CavitySpec(),
             breakpoints: Sequence[float] = (), alpha: float = ALPHA,
             constants: PhysicalConstants = DEFAULT) -> dict:
    """F2 energy shift in eV with diagnostics (``result["value"]``)."""
    if method == "resolvent":
        f2 = f2_density(potentials, kappa_max, u_nodes)
        if kappa_max >= 2 and not f2.diagnostics["tail_ratio"] < 1.0 and not f2.diagnostics["below_noise_floor"]:
            raise ConvergenceError("F2 partial waves do not decrease", f2.diagnostics)
        out = f2_shift_from_density(state, f2, alpha, constants)
        out.update(method=method, kappa_max=kappa_max, u_nodes=u_nodes, tail_ratio=f2.diagnostics["tail_ratio"])
        return out
    if method == "spectral":
        out = f2_shift_spectral(state, potentials, kappa_max, k_quadrature, cavity, breakpoints, alpha, constants)
        out.update(method=method, kappa_max=kappa_max)
        return out
    raise ValueError(f"unknown F2 method {method!r}")


# ---------------------------------------------------------------------------
# report


@dataclass
class EnergyShiftReport:
    Z: int
    models: dict
    state_label: str
    f1_uehling_eV: float
    f1_wk_eV: float
    f2_eV: float
    scaling_estimate_eV: float
    first_order_uehling_eV: float
    total_eV: float = field(init=False)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.total_eV = self.f1_uehling_eV + self.f1_wk_eV + self.f2_eV

    @property
    def higher_order_eV(self) -> float:
        return self.f1_wk_eV + self.f2_eV

    def bookkeeping_ok(self) -> bool:
        return self.total_eV == self.f1_uehling_eV + self.f1_wk_eV + self.f2_eV

    def sign_checks(self) -> dict:
        return {"f1_uehling_negative": self.f1_uehling_eV < 0, "f1_wk_positive": self.f1_wk_eV > 0,
                "f2_negative": self.f2_eV < 0}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["higher_order_eV"] = self.higher_order_eV
        d["sign_checks"] = self.sign_checks()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)


CSV_COLUMNS = ("system", "state", "F1Ueh", "total", "F1WK", "F2")


def reports_to_csv(reports: Sequence[EnergyShiftReport], names: dict | None = None) -> str:
    """Table-shaped CSV: system, state, F1Ueh, total, F1WK, F2 (eV, repr precision)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        name = (names or {}).get(rep.Z, f"Z={rep.Z}")
        w.writerow([name, rep.state_label, repr(rep.f1_uehling_eV), repr(rep.total_eV), repr(rep.f1_wk_eV),
                    repr(rep.f2_eV)])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


@dataclass(frozen=True)
class Numerics:
    bound_points: int = 4000
    wk_points: int = 2000
    kappa_max: int = 10
    u_nodes: int = 64
    k_nodes: int = 400
    k_max: float = 40.0
    basis_size: int = 60
    cavity_radius: float = 5.0
    f2_method: str = "resolvent"
    include_wk_in_vp: bool = True

    def doubled(self, name: str) -> "Numerics":
        mapping = {"grid_points": ("bound_points", "wk_points")}
        fields = mapping.get(name, (name,))
        kw = {f: 2 * getattr(self, f) for f in fields}
        return Numerics(**{**asdict(self), **kw})


@dataclass
class SystemContext:
    """Everything shared by the states of one nucleus: models, grids, WK density and potentials."""

    sphere: NuclearModel
    shell: NuclearModel  # model of the WK density
    numerics: Numerics
    wk: ChargeDensity
    potentials: VPPotentialSet
    bound_grid: RadialGrid
    f2_cache: dict = field(default_factory=dict)  # F2 density and potentials shared by all states

    constants: PhysicalConstants = DEFAULT

    @classmethod
    def build(cls, Z: int, rms_fm: float, numerics: Numerics = Numerics(), wk: ChargeDensity | None = None,
              constants: PhysicalConstants = DEFAULT, f2: F2Density | None = None,
              wk_shape: str = "spherical_shell") -> "SystemContext":
        alpha = constants.alpha
        sphere = NuclearModel.from_rms(Z, rms_fm, "uniform_sphere", constants)
        shell = sphere.with_shape(wk_shape, constants)
        if wk is None:
            wk = wk_density(shell, numerics.kappa_max, numerics.u_nodes,
                            grid=wk_grid(sphere, n=numerics.wk_points), alpha=alpha)
        pots = build_potential_set(sphere, wk, wk.grid, numerics.include_wk_in_vp, alpha)
        ctx = cls(sphere, shell, numerics, wk, pots, bound_grid(sphere, numerics.bound_points), constants=constants)
        if f2 is not None:
            ctx.f2_cache["density"] = f2
        return ctx

    def f2_density(self) -> F2Density:
        if "density" not in self.f2_cache:
            n = self.numerics
            self.f2_cache["density"] = f2_density(self.potentials, n.kappa_max, n.u_nodes)
        return self.f2_cache["density"]

    def memo(self, name: str, build):
        if name not in self.f2_cache:
            self.f2_cache[name] = build()
        return self.f2_cache[name]

    def report(self, label: str) -> "EnergyShiftReport":
        return assemble_report(self, label, self.constants.alpha, self.constants)


def assemble_report(ctx: SystemContext, label: str, alpha: float = ALPHA,
                    constants: PhysicalConstants = DEFAULT) -> EnergyShiftReport:
    """All contributions for one state of one nucleus."""
    n = ctx.numerics
    state = solve_state(ctx.sphere, label, ctx.bound_grid, alpha)
    g = ctx.bound_grid
    e1 = first_order_uehling_shift(state, ctx.sphere, alpha, constants,
                                   ctx.memo("v_ueh", lambda: nuclear_uehling_potential(ctx.sphere, g, alpha)))
    uu = uehling_in_uehling_shift(state, ctx.sphere, alpha, constants,
                                  ctx.memo("u_ueh_ueh", lambda: uehling_in_uehling_potential(ctx.sphere, g, alpha)))
    uwk = wk_in_uehling_shift(state, ctx.wk, alpha, constants,
                              ctx.memo("u_ueh_wk", lambda: uehling_potential_of_density(ctx.wk.density, g, alpha)))
    z = zwk(ctx.wk, ctx.shell)
    if n.f2_method == "resolvent":
        f2 = f2_shift_from_density(state, ctx.f2_density(), alpha, constants)
        f2.update(method="resolvent", kappa_max=n.kappa_max, u_nodes=n.u_nodes,
                  tail_ratio=ctx.f2_density().diagnostics["tail_ratio"])
    else:
        f2 = f2_shift(state, ctx.potentials, n.kappa_max, "spectral", n.u_nodes,
                      KQuadrature(n.k_max, n.k_nodes), CavitySpec(n.basis_size, n.cavity_radius),
                      ctx.sphere.breakpoints, alpha, constants)
    diag = {
        "numerics": asdict(n),
        "zwk": z,
        "wk_total_charge": ctx.wk.total_charge(),
        "wk_tail_ratio": ctx.wk.diagnostics.get("tail_ratio"),
        "wk_partial_wave_charges": ctx.wk.diagnostics.get("partial_wave_charges"),
        "f2": f2,
        "v_vp_over_v_c_inside_r1": ctx.potentials.perturbation_ratio(),
        "v_vp_includes_wk": ctx.potentials.includes_wk,
        "bound_energy": state.energy,
        "rms_fm": ctx.sphere.rms_fm,
    }
    models = {"bound_states_and_coulomb": ctx.sphere.shape, "uehling": ctx.sphere.shape, "wk_density": ctx.shell.shape}
    rep = EnergyShiftReport(ctx.sphere.Z, models, state_label(*parse_state(label)), uu, uwk, float(f2["value"]),
                            scaling_estimate(z, e1, ctx.sphere.Z), e1, diagnostics=diag)
    if not rep.bookkeeping_ok():
        raise ArithmeticError("total differs from the sum of its parts")
    return rep


# ---------------------------------------------------------------------------
# convergence


CONVERGENCE_PARAMETERS = ("grid_points", "kappa_max", "u_nodes", "k_nodes", "basis_size", "cavity_radius")
CONVERGENCE_THRESHOLD = 0.01
REPORTED_COLUMNS = ("f1_uehling_eV", "f1_wk_eV", "f2_eV", "total_eV")
_SPECTRAL_ONLY = ("k_nodes", "basis_size", "cavity_radius")


def parameter_used(name: str, numerics: Numerics) -> bool:
    """Whether doubling ``name`` can change any reported number."""
    return not (name in _SPECTRAL_ONLY and numerics.f2_method == "resolvent")


def _table(reports) -> dict:
    return {r.state_label: {c: getattr(r, c) for c in REPORTED_COLUMNS} for r in reports}


def convergence_study(context_factory, labels: Sequence[str], numerics: Numerics = Numerics(),
                      parameters: Sequence[str] = CONVERGENCE_PARAMETERS,
                      threshold: float = CONVERGENCE_THRESHOLD) -> dict:
    """Relative change of every reported number under independent doubling of each parameter.

    ``context_factory(numerics)`` returns a :class:`SystemContext`.  A
    parameter that does not enter the selected F2 method is recorded as
    not applicable with zero change.
    """
    base = _table([context_factory(numerics).report(lb) for lb in labels])
    out = {"baseline_numerics": asdict(numerics), "baseline": base, "threshold": threshold, "parameters": {}}
    passed = True
    for name in parameters:
        doubled = numerics.doubled(name)
        entry = {"numerics": asdict(doubled), "applicable": parameter_used(name, numerics)}
        if entry["applicable"]:
            values = _table([context_factory(doubled).report(lb) for lb in labels])
        else:
            values = base
        rel = {st: {c: abs(values[st][c] - base[st][c]) / abs(base[st][c]) for c in REPORTED_COLUMNS}
               for st in base}
        worst = max(v for row in rel.values() for v in row.values())
        entry.update(values=values, relative_change=rel, max_relative_change=worst, passed=worst < threshold)
        passed &= entry["passed"]
        out["parameters"][name] = entry
    out["passed"] = passed
    return out
