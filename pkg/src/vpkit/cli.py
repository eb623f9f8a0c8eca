"""Command-line front end: ``vpkit <command> --config <path> [--out DIR] [--jobs N] [--no-cache]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .cache import ArrayCache, atomic_write_text, cache_key, canonical_json
from .config import ConfigError, RunConfig, SystemSpec, load_config
from .constants import PhysicalConstants, natural_to_fm
from .dirac import analytic_coulomb_energy, bound_grid, parse_state, state_label
from .greens import TAIL_RATIO_MAX, ChargeDensity, ConvergenceError, sign_change_radius, wk_density, wk_grid, zwk
from .grid import RadialFunction
from .nuclear import NuclearModel
from .twoloop import (F2Density, Numerics, SystemContext, convergence_study, f2_density, first_order_uehling_shift,
                      reports_to_csv, solve_state)
from .uehling import induced_charge_interior, nuclear_uehling_potential, uehling_density_uniform_sphere

log = logging.getLogger("vpkit")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_INTERNAL = 0, 2, 3, 4
COMMANDS = ("bound-state", "uehling", "wk-density", "two-loop", "convergence", "fig5")
NON_PAPER_NOTE = "nuclear radius not taken from the reference data"


# ---------------------------------------------------------------------------
# cached building blocks


def _model_key(spec: SystemSpec, constants: PhysicalConstants) -> dict:
    return {"Z": spec.Z, "rms_fm": spec.rms_fm, "constants": asdict(constants)}


def wk_key(spec: SystemSpec, numerics: Numerics, constants: PhysicalConstants) -> str:
    return cache_key({"kind": "wk_density", "model": _model_key(spec, constants), "shape": spec.wk_shape,
                      "wk_points": numerics.wk_points, "kappa_max": numerics.kappa_max, "u_nodes": numerics.u_nodes})


def f2_key(spec: SystemSpec, numerics: Numerics, constants: PhysicalConstants) -> str:
    return cache_key({"kind": "f2_density", "wk": wk_key(spec, numerics, constants),
                      "include_wk_in_vp": numerics.include_wk_in_vp, "tail_ratio_max": TAIL_RATIO_MAX})


def cached_wk_density(spec: SystemSpec, numerics: Numerics, constants: PhysicalConstants,
                      cache: ArrayCache) -> ChargeDensity:
    sphere = NuclearModel.from_rms(spec.Z, spec.rms_fm, "uniform_sphere", constants)
    grid = wk_grid(sphere, n=numerics.wk_points)
    key = wk_key(spec, numerics, constants)
    hit = cache.load(key)
    if hit is not None:
        arrays, meta = hit
        dens = RadialFunction(grid, arrays["density"], label="rho_WK")
        return ChargeDensity(dens, meta["kappa_max"], meta["u_nodes"], meta["tail_extrapolated"],
                             arrays["partial_waves"], meta["diagnostics"])
    wk = wk_density(sphere.with_shape(spec.wk_shape, constants), numerics.kappa_max, numerics.u_nodes,
                    grid=grid, alpha=constants.alpha)
    cache.store(key, {"density": wk.density.values, "partial_waves": wk.partial_waves},
                {"kappa_max": wk.kappa_max, "u_nodes": wk.u_nodes, "tail_extrapolated": wk.tail_extrapolated,
                 "diagnostics": wk.diagnostics})
    return wk


def build_context(spec: SystemSpec, numerics: Numerics, constants: PhysicalConstants,
                  cache: ArrayCache) -> SystemContext:
    wk = cached_wk_density(spec, numerics, constants, cache)
    ctx = SystemContext.build(spec.Z, spec.rms_fm, numerics, wk, constants, wk_shape=spec.wk_shape)
    if numerics.f2_method != "resolvent":
        return ctx
    key = f2_key(spec, numerics, constants)
    hit = cache.load(key)
    if hit is not None:
        arrays, meta = hit
        grid = ctx.potentials.grid
        ctx.f2_cache["density"] = F2Density(RadialFunction(grid, arrays["density"], label="rho_F2"),
                                            arrays["partial_waves"], meta["kappa_max"], meta["u_nodes"],
                                            arrays["tail"], meta["diagnostics"])
    else:
        f2 = f2_density(ctx.potentials, numerics.kappa_max, numerics.u_nodes)
        cache.store(key, {"density": f2.density.values, "partial_waves": f2.partial_waves, "tail": f2.tail},
                    {"kappa_max": f2.kappa_max, "u_nodes": f2.u_nodes, "diagnostics": f2.diagnostics})
        ctx.f2_cache["density"] = f2
    return ctx


# ---------------------------------------------------------------------------
# commands (each returns {relative path: text})


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(type(o).__name__)

    return json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n"


def _system_meta(spec: SystemSpec) -> dict:
    meta = {"name": spec.name, "Z": spec.Z, "rms_fm": spec.rms_fm, "wk_shape": spec.wk_shape}
    if spec.non_paper_input:
        meta["non_paper_input"] = NON_PAPER_NOTE
    return meta


def cmd_bound_state(cfg: RunConfig, cache: ArrayCache) -> dict:
    c = cfg.constants
    rows, meta = [], []
    for spec in cfg.systems:
        sphere = NuclearModel.from_rms(spec.Z, spec.rms_fm, "uniform_sphere", c)
        grid = bound_grid(sphere, cfg.numerics.bound_points)
        for label in cfg.states:
            n, kappa = parse_state(label)
            st = solve_state(sphere, label, grid, c.alpha)
            point = analytic_coulomb_energy(spec.Z, n, kappa, c.alpha)
            rows.append([spec.name, state_label(n, kappa), kappa, st.energy, (st.energy - 1.0) * c.electron_rest_energy_eV,
                         point, (st.energy - point) * c.electron_rest_energy_eV])
        meta.append(_system_meta(spec))
    header = ["system", "state", "kappa", "energy_natural", "binding_eV", "point_coulomb_energy_natural",
              "finite_size_shift_eV"]
    return {"bound_states.csv": _csv(header, rows), "bound_states.json": _json({"systems": meta})}


def cmd_uehling(cfg: RunConfig, cache: ArrayCache) -> dict:
    c = cfg.constants
    rows, meta = [], []
    for spec in cfg.systems:
        sphere = NuclearModel.from_rms(spec.Z, spec.rms_fm, "uniform_sphere", c)
        grid = bound_grid(sphere, cfg.numerics.bound_points)
        pot = nuclear_uehling_potential(sphere, grid, c.alpha)
        for label in cfg.states:
            st = solve_state(sphere, label, grid, c.alpha)
            rows.append([spec.name, state_label(*parse_state(label)),
                         first_order_uehling_shift(st, sphere, c.alpha, c, pot)])
        meta.append({**_system_meta(spec), "uehling_interior_charge": induced_charge_interior(sphere, c.alpha)})
    return {"uehling.csv": _csv(["system", "state", "first_order_uehling_eV"], rows),
            "uehling.json": _json({"systems": meta})}


def cmd_wk_density(cfg: RunConfig, cache: ArrayCache) -> dict:
    c = cfg.constants
    out, summary = {}, []
    for spec in cfg.systems:
        wk = cached_wk_density(spec, cfg.numerics, c, cache)
        shell = NuclearModel.from_rms(spec.Z, spec.rms_fm, spec.wk_shape, c)
        r = wk.grid.points
        out[f"wk_density_{spec.name}.csv"] = _csv(["r_natural", "r_fm", "rho"],
                                                  zip(r.tolist(), natural_to_fm(r, c).tolist(),
                                                      wk.density.values.tolist()))
        summary.append({**_system_meta(spec), "zwk": zwk(wk, shell),
                        "r_minus_natural": sign_change_radius(wk, shell.R0 * (1 + 1e-9)),
                        "total_charge": wk.total_charge(), "kappa_max": wk.kappa_max, "u_nodes": wk.u_nodes,
                        "diagnostics": wk.diagnostics})
    out["wk_density.json"] = _json({"systems": summary})
    return out


def _two_loop_system(args):
    spec, cfg_numerics, states, constants, cache_root, cache_on = args
    cache = ArrayCache(cache_root, cache_on)
    ctx = build_context(spec, cfg_numerics, constants, cache)
    return [ctx.report(lb) for lb in states]


def _map_systems(cfg: RunConfig, cache: ArrayCache, jobs: int):
    tasks = [(s, cfg.numerics, cfg.states, cfg.constants, str(cache.root), cache.enabled) for s in cfg.systems]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_two_loop_system, tasks))
    return [_two_loop_system(t) for t in tasks]


def cmd_two_loop(cfg: RunConfig, cache: ArrayCache, jobs: int = 1) -> dict:
    per_system = _map_systems(cfg, cache, jobs)
    reports = [r for rs in per_system for r in rs]
    payload = {"systems": [_system_meta(s) for s in cfg.systems],
               "reports": [{"system": s.name, **r.to_dict()} for s, rs in zip(cfg.systems, per_system) for r in rs]}
    out = {}
    if "csv" in cfg.formats:
        out["two_loop.csv"] = reports_to_csv(reports, cfg.names())
    out["two_loop.json"] = _json(payload)
    return out


def cmd_convergence(cfg: RunConfig, cache: ArrayCache, jobs: int = 1) -> dict:
    studies = {}
    rows = []
    for spec in cfg.systems:
        study = convergence_study(lambda n, spec=spec: build_context(spec, n, cfg.constants, cache),
                                  cfg.states, cfg.numerics)
        studies[spec.name] = study
        for pname, entry in study["parameters"].items():
            rows.append([spec.name, pname, entry["applicable"], entry["max_relative_change"], entry["passed"]])
    payload = {"systems": [_system_meta(s) for s in cfg.systems], "studies": studies,
               "passed": all(s["passed"] for s in studies.values())}
    return {"convergence.csv": _csv(["system", "parameter", "applicable", "max_relative_change", "passed"], rows),
            "convergence.json": _json(payload)}


def cmd_fig5(cfg: RunConfig, cache: ArrayCache) -> dict:
    """Uehling charge density of each system on a grid clustered at the nuclear radius."""
    c = cfg.constants
    out = {}
    for spec in cfg.systems:
        sphere = NuclearModel.from_rms(spec.Z, spec.rms_fm, "uniform_sphere", c)
        R0 = sphere.R0
        offs = np.geomspace(1e-8, 1.0, 200) * R0
        r = np.unique(np.concatenate([np.linspace(1e-3, 1.0, 200) * R0, R0 - offs[offs < R0], R0 + offs,
                                      np.geomspace(2 * R0, 10 * R0, 100)]))
        r = r[r != R0]
        rho = uehling_density_uniform_sphere(sphere, r, c.alpha)
        out[f"fig5_{spec.name}.csv"] = _csv(["r_natural", "r_fm", "r_over_R0", "rho_uehling"],
                                            zip(r.tolist(), natural_to_fm(r, c).tolist(), (r / R0).tolist(),
                                                rho.tolist()))
    return out


HANDLERS = {"bound-state": cmd_bound_state, "uehling": cmd_uehling, "wk-density": cmd_wk_density,
            "two-loop": cmd_two_loop, "convergence": cmd_convergence, "fig5": cmd_fig5}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vpkit", description="Two-loop vacuum polarisation in hydrogen-like ions.")
    p.add_argument("--version", action="version", version=f"vpkit {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML run configuration (defaults: U and Pb, 1s/2s/2p1/2)")
    p.add_argument("--out", help="output directory (overrides outputs.dir)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes over systems")
    p.add_argument("--no-cache", action="store_true", help="neither read nor write the density cache")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _error(out_dir: Path | None, code: int, kind: str, message: str, details: dict | None = None) -> int:
    err = {"status": "error", "exit_code": code, "error": kind, "message": message, "details": details or {}}
    text = _json(err)
    sys.stderr.write(text)
    if out_dir is not None:
        try:
            atomic_write_text(out_dir / "error.json", text)
        except OSError:
            pass
    return code


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out_dir = Path(args.out) if args.out else None
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _error(out_dir, EXIT_CONFIG, "config", str(exc))
    out_dir = Path(args.out or cfg.out_dir)
    cache = ArrayCache(out_dir / "cache", enabled=not args.no_cache)
    handler = HANDLERS[args.command]
    try:
        if args.command in ("two-loop", "convergence"):
            files = handler(cfg, cache, args.jobs)
        else:
            files = handler(cfg, cache)
    except ConvergenceError as exc:
        return _error(out_dir, EXIT_CONVERGENCE, "convergence", str(exc), exc.diagnostics)
    except Exception as exc:  # noqa: BLE001 - every failure must surface as error JSON
        log.debug("internal error", exc_info=True)
        return _error(out_dir, EXIT_INTERNAL, type(exc).__name__, str(exc),
                      {"traceback": traceback.format_exc().splitlines()[-6:]})
    for name, text in files.items():
        atomic_write_text(out_dir / name, text)
    manifest = {"status": "ok", "command": args.command, "files": sorted(files),
                "config_key": cache_key(json.loads(canonical_json(cfg.raw)))}
    atomic_write_text(out_dir / "manifest.json", _json(manifest))
    print(_json(manifest), end="")
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
