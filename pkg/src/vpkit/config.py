"""Run configuration: YAML file, schema-validated, merged over defaults."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import yaml

from .constants import DEFAULT, PhysicalConstants
from .twoloop import Numerics

# Pb rms radius is not part of the reference data; modern tabulated value.
PB_RMS_FM = 5.5012
U_RMS_FM = 5.8604

DEFAULTS = {
    "systems": [
        {"name": "U", "Z": 92, "rms_fm": U_RMS_FM},
        {"name": "Pb", "Z": 82, "rms_fm": PB_RMS_FM, "non_paper_input": True},
    ],
    "states": ["1s1/2", "2s1/2", "2p1/2"],
    "numerics": {
        "bound_points": 4000,
        "wk_points": 2000,
        "kappa_max": 10,
        "u_nodes": 64,
        "k_nodes": 400,
        "k_max": 40.0,
        "basis_size": 60,
        "cavity_radius": 5.0,
        "f2_method": "resolvent",
        "include_wk_in_vp": True,
    },
    "outputs": {"formats": ["csv", "json"], "dir": "vpkit-out"},
    "constants": {},
}

_POS_INT = {"type": "integer", "exclusiveMinimum": 0}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "systems": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["Z"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "Z": {"type": "integer", "minimum": 1, "maximum": 120},
                    "rms_fm": _POS_NUM,
                    "R0_fm": _POS_NUM,
                    "non_paper_input": {"type": "boolean"},
                    "wk_shape": {"enum": ["spherical_shell", "uniform_sphere"]},
                },
                "oneOf": [{"required": ["rms_fm"]}, {"required": ["R0_fm"]}],
            },
        },
        "states": {"type": "array", "minItems": 1, "items": {"type": "string"}},
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "bound_points": {"type": "integer", "minimum": 200},
                "wk_points": {"type": "integer", "minimum": 200},
                "kappa_max": _POS_INT,
                "u_nodes": {"type": "integer", "minimum": 2},
                "k_nodes": {"type": "integer", "minimum": 20, "multipleOf": 20},
                "k_max": _POS_NUM,
                "basis_size": {"type": "integer", "minimum": 20},
                "cavity_radius": _POS_NUM,
                "f2_method": {"enum": ["resolvent", "spectral"]},
                "include_wk_in_vp": {"type": "boolean"},
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "formats": {"type": "array", "items": {"enum": ["csv", "json"]}, "minItems": 1},
                "dir": {"type": "string", "minLength": 1},
            },
        },
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha": _POS_NUM,
                "electron_rest_energy_eV": _POS_NUM,
                "fm_per_natural_length": _POS_NUM,
            },
        },
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    name: str
    Z: int
    rms_fm: float
    non_paper_input: bool = False
    wk_shape: str = "spherical_shell"


@dataclass(frozen=True)
class RunConfig:
    systems: tuple
    states: tuple
    numerics: Numerics
    formats: tuple
    out_dir: str
    constants: PhysicalConstants = DEFAULT
    raw: dict = field(default_factory=dict, compare=False)

    def names(self) -> dict:
        return {s.Z: s.name for s in self.systems}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_config(data: dict | None) -> RunConfig:
    """Validate a mapping (as read from YAML) and build a :class:`RunConfig`."""
    from .dirac import parse_state

    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    merged = _merge(DEFAULTS, data)
    try:
        constants = DEFAULT.with_overrides(**merged["constants"])
    except ValueError as exc:
        raise ConfigError(f"constants: {exc}") from None
    systems = []
    for s in merged["systems"]:
        rms = s["rms_fm"] if "rms_fm" in s else math.sqrt(3.0 / 5.0) * s["R0_fm"]
        systems.append(SystemSpec(s.get("name", f"Z{s['Z']}"), int(s["Z"]), float(rms),
                                  bool(s.get("non_paper_input", False)), s.get("wk_shape", "spherical_shell")))
    if len({s.name for s in systems}) != len(systems):
        raise ConfigError("systems: names must be unique")
    for label in merged["states"]:
        try:
            parse_state(label)
        except ValueError as exc:
            raise ConfigError(f"states: {exc}") from None
    return RunConfig(tuple(systems), tuple(merged["states"]), Numerics(**merged["numerics"]),
                     tuple(merged["outputs"]["formats"]), merged["outputs"]["dir"], constants, merged)


def load_config(path: str | Path | None) -> RunConfig:
    """Read a YAML file; ``None`` gives the defaults."""
    if path is None:
        return parse_config({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return parse_config(data)
