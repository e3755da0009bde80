"""Structured run configuration.

Configs are YAML files in which every dimensional quantity is written as a
string with an explicit unit tag ("e0: 6.0 MV/cm"); bare numbers are only
accepted where the schema declares the field dimensionless.  The published
inputs mix four unit systems, and silent misconversion is the main
reproduction hazard, so parsing converts everything to atomic units exactly
once, and unknown keys are rejected outright.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
import yaml

from . import units
from .model import MolecularModel, build_grid, load_tabulated, preset, MolecularModel
from .propagator import CapSpec, PropagationConfig
from .pulse import ChirpedPulse


class ConfigError(ValueError):
    pass


# Leaf kinds: ("quantity", dimension) | "float" | "int" | "str" | "bool" | "int_list"
_SCHEMA = {
    "molecule": {
        "preset": "str",
        "reduced_mass": ("quantity", "mass"),
        "potential_file": "str",
        "dipole_file": "str",
    },
    "grid": {
        "n_points": "int",
        "x_min": ("quantity", "length"),
        "x_max": ("quantity", "length"),
    },
    "propagation": {
        "dt": ("quantity", "time"),
        "cap_xi": ("quantity", "energy"),
        "cap_onset": ("quantity", "length"),
        "flux_point": ("quantity", "length"),
        "record_stride": "int",
    },
    "pulse": {
        "e0": ("quantity", "field"),
        "alpha": ("quantity", "inverse_time_squared"),
        "omega0": ("quantity", "energy"),
        "gamma1": "float",
        "gamma2": "float",
        "phase": "float",
    },
    "dsp": {
        "e0": ("quantity", "field"),
        "alpha": ("quantity", "inverse_time_squared"),
        "omega0": ("quantity", "energy"),
        "gamma1": "float",
        "gamma2": "float",
        "delta_t0": ("quantity", "time"),
        "phase": "float",
    },
    "optimizer": {
        "seed": "int",
        "bo_iterations": "int",
        "kappa": "float",
        "cma_generations": "int",
        "cma_lambda": "int",
    },
    "scan": {
        "mode": "str",
        "e0_min": ("quantity", "field"),
        "e0_max": ("quantity", "field"),
        "n_e0": "int",
        "alpha_min": ("quantity", "inverse_time_squared"),
        "alpha_max": ("quantity", "inverse_time_squared"),
        "n_alpha": "int",
    },
    "regime": {
        "omega0": ("quantity", "energy"),
        "beta": "float",
        "dipole_slope": "float",
        "reduced_mass": ("quantity", "mass"),
    },
    "phase_sweep": {
        "n_phases": "int",
    },
    "contributions": {
        "levels": "int_list",
    },
    "efficiency": {
        "s_cm2": "float",
        "rho_mol_cm2": "float",
        "dissociation": "float",
    },
}

_AU_TAG = {
    "mass": "au_mass",
    "length": "bohr",
    "time": "au_time",
    "energy": "hartree",
    "field": "au_field",
    "inverse_time_squared": "au_time^-2",
}


def _parse_quantity(raw, dimension: str, where: str) -> float:
    if isinstance(raw, (int, float)):
        raise ConfigError(
            f"{where}: bare number; write a unit tag (e.g. '6.0 MV/cm')"
        )
    parts = str(raw).split()
    if len(parts) != 2:
        raise ConfigError(f"{where}: expected '<value> <unit>', got {raw!r}")
    try:
        value = float(parts[0])
    except ValueError as exc:
        raise ConfigError(f"{where}: non-numeric value in {raw!r}") from exc
    try:
        dim = units.dimension_of(parts[1])
    except units.UnitError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    if dim != dimension:
        raise ConfigError(
            f"{where}: unit {parts[1]!r} has dimension {dim}, expected {dimension}"
        )
    return units.to_au(value, parts[1])


def _parse_leaf(raw, kind, where: str):
    if isinstance(kind, tuple):
        return _parse_quantity(raw, kind[1], where)
    if kind == "float":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{where}: expected a dimensionless number, got {raw!r}")
        return float(raw)
    if kind == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{where}: expected an integer, got {raw!r}")
        return int(raw)
    if kind == "str":
        if not isinstance(raw, str):
            raise ConfigError(f"{where}: expected a string, got {raw!r}")
        return raw
    if kind == "int_list":
        if not isinstance(raw, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in raw
        ):
            raise ConfigError(f"{where}: expected a list of integers, got {raw!r}")
        return list(raw)
    raise ConfigError(f"{where}: unhandled schema kind {kind!r}")


@dataclass(frozen=True)
class RunConfig:
    """Normalized configuration: every quantity already in atomic units."""

    data: dict

    def section(self, name: str) -> dict:
        return self.data.get(name, {})

    def get(self, section: str, key: str, default=None):
        return self.data.get(section, {}).get(key, default)

    def require(self, section: str, key: str):
        try:
            return self.data[section][key]
        except KeyError:
            raise ConfigError(f"missing required config key {section}.{key}") from None

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.data, sort_keys=True).encode()
        ).hexdigest()

    # --- builders ---

    def build_model(self) -> MolecularModel:
        mol = self.section("molecule")
        if "preset" in mol:
            for k in ("reduced_mass", "potential_file", "dipole_file"):
                if k in mol:
                    raise ConfigError(f"molecule.preset excludes molecule.{k}")
            return preset(mol["preset"])
        for k in ("reduced_mass", "potential_file", "dipole_file"):
            if k not in mol:
                raise ConfigError(f"molecule needs preset or molecule.{k}")
        grid_sec = self.section("grid")
        for k in ("n_points", "x_min", "x_max"):
            if k not in grid_sec:
                raise ConfigError(f"tabulated molecule needs grid.{k}")
        grid = build_grid(grid_sec["n_points"], grid_sec["x_min"], grid_sec["x_max"])
        return MolecularModel(
            name="tabulated",
            reduced_mass=mol["reduced_mass"],
            potential=load_tabulated(mol["potential_file"], "potential"),
            dipole=load_tabulated(mol["dipole_file"], "dipole"),
            grid=grid,
        )

    def propagation_config(self) -> PropagationConfig:
        p = self.section("propagation")
        cap = CapSpec(
            xi=p.get("cap_xi", 1.0),
            x_onset=p.get("cap_onset", 12.0),
        )
        return PropagationConfig(
            dt=p.get("dt", 1.0),
            cap=cap,
            flux_point=p.get("flux_point"),
            record_stride=p.get("record_stride"),
        )

    def pulse_params(self, section: str = "pulse") -> dict:
        sec = self.section(section)
        for k in ("e0", "alpha"):
            if k not in sec:
                raise ConfigError(f"missing required config key {section}.{k}")
        return dict(sec)

    def build_pulse(self, omega0_default: float, section: str = "pulse") -> ChirpedPulse:
        sec = self.pulse_params(section)
        alpha = sec["alpha"]
        sigma = 1.0 / np.sqrt(2.0 * alpha)
        return ChirpedPulse(
            e0=sec["e0"],
            alpha=alpha,
            t0=4.0 * sigma + sec.get("delta_t0", 0.0),
            omega0=sec.get("omega0", omega0_default),
            gamma1=sec.get("gamma1", 0.0),
            gamma2=sec.get("gamma2", 0.0),
            phase=sec.get("phase", 0.0),
        )


def parse_config_data(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    data = {}
    for section, content in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(content, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        schema = _SCHEMA[section]
        out = {}
        for key, value in content.items():
            if key not in schema:
                raise ConfigError(f"unknown config key {section}.{key}")
            out[key] = _parse_leaf(value, schema[key], f"{section}.{key}")
        data[section] = out
    return RunConfig(data=data)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if raw is None:
        raw = {}
    return parse_config_data(raw)


def serialize_config(config: RunConfig) -> str:
    """Canonical YAML with every quantity in atomic-unit tags.

    Parsing the serialized text reproduces the normalized config exactly.
    """
    doc: dict = {}
    for section in sorted(config.data):
        schema = _SCHEMA[section]
        sec_out = {}
        for key in sorted(config.data[section]):
            value = config.data[section][key]
            kind = schema[key]
            if isinstance(kind, tuple):
                sec_out[key] = f"{value!r} {_AU_TAG[kind[1]]}"
            else:
                sec_out[key] = value
        doc[section] = sec_out
    return yaml.safe_dump(doc, sort_keys=True, default_flow_style=False)


def save_config(path, config: RunConfig) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_config(config))
