"""Run configuration: a nested YAML mapping layered over built-in defaults.

Every key a user may set already exists in ``default_config()``; a config
file or ``--set`` override that names anything else is rejected, which keeps
typos from silently falling back to defaults.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import re
from pathlib import Path

import yaml

from .circuit import InstrumentModel
from .core import DEFAULT_GEOMETRY, CoilPairGeometry, DualEMError
from .inductive import QuadratureSpec
from .scenarios import KINDS, ScenarioSpec


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e6``-style floats as numbers."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def _yaml(text: str):
    return yaml.load(text, Loader=_Loader)


class ConfigError(DualEMError):
    """Unreadable config file or a config naming an unknown key."""


class OverrideError(ConfigError):
    """A ``--set`` item that is malformed or names an unknown key."""


_SCENARIO_SKIP = {"kind", "geometry", "instrument", "quadrature", "cell", "extrusion_length", "ferrite_ring_x"}


def _fields(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}


def default_config() -> dict:
    scenarios = {}
    for kind in KINDS:
        spec = ScenarioSpec(kind)
        entry = {k: v for k, v in _fields(spec).items() if k not in _SCENARIO_SKIP}
        entry["sweep"] = list(spec.sweep)
        scenarios[kind] = entry
    return {
        "geometry": _fields(DEFAULT_GEOMETRY),
        "quadrature": _fields(QuadratureSpec()),
        "cross_section": {
            "cell": 0.25e-3,
            "half_width": 60e-3,
            "y_min": -30e-3,
            "y_max": 30e-3,
            "substrate_thickness": 1.6e-3,
            "substrate_eps_r": 4.4,
            "liftoff": 1.6e-3,
            "extrusion_length": None,
            "track_width": 4e-3,
            "track_gap": 1e-3,
        },
        "instrument": _fields(InstrumentModel()),
        "inductive": {
            "frequencies": [1e4, 1e5, 1e6],
            "current": 10e-3,
            "plate": {"sigma": 5.8e7, "mu_r": 1.0, "c": 300e-6, "liftoff": 5e-3},
        },
        "capacitive": {
            "sample_eps_r": 1.0,
            "sample_thickness": 0.0,
            "receiver_scale": None,
            "write_fields": False,
        },
        "circuit": {
            "frequencies": [1e6],
            "self_inductance": 320e-9,
            "mutual_inductance": None,
            "v_exc": 1.0,
            "netlist": None,
        },
        "scenarios": scenarios,
    }


def _merge(base: dict, patch: dict, path: str = "") -> None:
    for key, value in patch.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, where + ".")
        else:
            base[key] = value


def load_config(path: str | Path | None = None, overrides=()) -> dict:
    cfg = default_config()
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {str(p)!r}: {exc.strerror}") from exc
        try:
            data = _yaml(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {str(p)!r}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {str(p)!r} must hold a mapping")
        _merge(cfg, data)
    for item in overrides:
        apply_override(cfg, item)
    return cfg


def apply_override(cfg: dict, item: str) -> None:
    """Apply one ``dotted.key=value`` override; the value is parsed as YAML."""
    if "=" not in item:
        raise OverrideError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node or not isinstance(node[part], dict):
            raise OverrideError(f"unknown config key {key!r}")
        node = node[part]
    if parts[-1] not in node:
        raise OverrideError(f"unknown config key {key!r}")
    node[parts[-1]] = _yaml(raw)


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def geometry_from(cfg: dict) -> CoilPairGeometry:
    return CoilPairGeometry(**cfg["geometry"])


def quadrature_from(cfg: dict) -> QuadratureSpec:
    return QuadratureSpec(**cfg["quadrature"])


def instrument_from(cfg: dict) -> InstrumentModel:
    return InstrumentModel(**cfg["instrument"])


def scenario_spec_from(cfg: dict, kind: str) -> ScenarioSpec:
    entry = copy.deepcopy(cfg["scenarios"][kind])
    entry["sweep"] = tuple(entry["sweep"])
    return ScenarioSpec(
        kind=kind,
        geometry=geometry_from(cfg),
        instrument=instrument_from(cfg),
        quadrature=quadrature_from(cfg),
        cell=cfg["cross_section"]["cell"],
        extrusion_length=cfg["cross_section"]["extrusion_length"],
        **entry,
    )
