"""Run configuration: JSON schema, defaults, and unit normalization.

Internal units are mm, N, MPa, ug and day throughout the package.  Config
files may state stress-like constants in kPa and the critical collagen
energy in J/ug; parsing converts them here, exactly once, so the numeric
core never sees a unit tag.  A normalized copy of the effective config is
written next to every run's outputs.
"""

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .growth import GrowthParams
from .materials import CollagenParams, MaterialParams, MatrixParams, TextileParams

STRESS_SCALE = {"MPa": 1.0, "kPa": 1e-3}
# Internal energy density is MPa mm^3/ug = mJ/ug; J/ug is 1000x larger.
ENERGY_SCALE = {"mJ/ug": 1.0, "J/ug": 1e3}

DEFAULTS = {
    "material": {
        "matrix": {"lam": 10.0, "mu": 0.05, "unit": "MPa"},
        "collagen": {"k1": 0.825, "k2": 4.0, "kappa": 0.0,
                     "axis": [1.0, 0.0, 0.0], "rho_f": 38.71, "unit": "MPa"},
        "textile": {"k1_1": 38.51, "k2_1": 1.48, "beta1": 3, "beta2": 2,
                    "k1_2": 214.39, "k2_2": 0.0001, "gamma1": 4, "gamma2": 2,
                    "k_coup1": 183.72, "delta1": 2,
                    "k_coup2": 58.71, "delta2": 3,
                    "k_coup_ani": 571.83, "xi": 12,
                    "n1": [1.0, 0.0, 0.0], "n2": [0.0, 1.0, 0.0],
                    "unit": "kPa"},
        "growth": {"a1": 5e-4, "a2": 5e-7,
                   "psi_crit": 2e-5, "psi_crit_unit": "mJ/ug",
                   "rho_th": 10.0, "c_cell": 15e3,
                   "tau": 14.21, "h": 1.65},
    },
    "simulation": {"t_end": 28.0, "dt0": 0.002, "dt_max": 0.25,
                   "dt_ratio": 1.25},
    "strip": {"length": 20.0, "width": 6.0, "thickness": 0.3,
              "nx": 20, "ny": 6, "nz": 2,
              "pressure": 0.002, "pressure_unit": "MPa", "follower": True},
}

_INT_KEYS = {"beta1", "beta2", "gamma1", "gamma2", "delta1", "delta2", "xi",
             "nx", "ny", "nz"}
_VEC_KEYS = {"axis", "n1", "n2"}
_UNIT_KEYS = {"unit", "psi_crit_unit", "pressure_unit"}


@dataclass(frozen=True)
class SimulationConfig:
    """Time marching controls, in days."""

    t_end: float
    dt0: float
    dt_max: float
    dt_ratio: float


@dataclass(frozen=True)
class StripConfig:
    """Clamped pressurized strip: geometry (mm), mesh density, load (MPa)."""

    length: float
    width: float
    thickness: float
    nx: int
    ny: int
    nz: int
    pressure: float
    follower: bool


@dataclass(frozen=True)
class RunConfig:
    material: MaterialParams
    simulation: SimulationConfig
    strip: StripConfig


def _merge(section, overrides, path):
    """Overlay `overrides` on defaults `section`, rejecting unknown keys."""
    if not isinstance(overrides, dict):
        raise ConfigError("expected an object", path)
    merged = {}
    for key, default in section.items():
        here = f"{path}.{key}" if path else key
        if key not in overrides:
            merged[key] = default
        elif isinstance(default, dict):
            merged[key] = _merge(default, overrides[key], here)
        else:
            merged[key] = _coerce(key, overrides[key], here)
    for key in overrides:
        if key not in section:
            here = f"{path}.{key}" if path else key
            raise ConfigError("unknown key", here)
    return merged


def _coerce(key, value, path):
    if key in _UNIT_KEYS:
        if not isinstance(value, str):
            raise ConfigError("unit must be a string", path)
        return value
    if key == "follower":
        if not isinstance(value, bool):
            raise ConfigError("expected true or false", path)
        return value
    if key in _VEC_KEYS:
        vec = np.asarray(value, dtype=float)
        if vec.shape != (3,) or not np.all(np.isfinite(vec)):
            raise ConfigError("expected a finite 3-vector", path)
        return [float(v) for v in vec]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number", path)
    if key in _INT_KEYS:
        if float(value) != int(value):
            raise ConfigError("expected an integer", path)
        return int(value)
    return float(value)


def _scale(table, kind, path):
    unit = table[next(iter(k for k in table if k in _UNIT_KEYS))]
    if unit not in kind:
        known = ", ".join(sorted(kind))
        raise ConfigError(f"unknown unit '{unit}' (expected one of {known})",
                          path)
    return kind[unit]


def parse_config(data, path=""):
    """Validate a config mapping and build internal-unit parameter objects."""
    full = _merge(DEFAULTS, data, path)
    mat, sim, strip = full["material"], full["simulation"], full["strip"]

    mx = mat["matrix"]
    s = _scale(mx, STRESS_SCALE, _join(path, "material.matrix.unit"))
    matrix = MatrixParams(lam=mx["lam"] * s, mu=mx["mu"] * s)

    co = mat["collagen"]
    s = _scale(co, STRESS_SCALE, _join(path, "material.collagen.unit"))
    collagen = CollagenParams(k1=co["k1"] * s, k2=co["k2"],
                              kappa=co["kappa"],
                              a=np.asarray(co["axis"]),
                              rho_f=co["rho_f"])

    tx = mat["textile"]
    s = _scale(tx, STRESS_SCALE, _join(path, "material.textile.unit"))
    textile = TextileParams(
        k1_1=tx["k1_1"] * s, k2_1=tx["k2_1"] * s,
        k1_2=tx["k1_2"] * s, k2_2=tx["k2_2"] * s,
        k_coup1=tx["k_coup1"] * s, k_coup2=tx["k_coup2"] * s,
        k_coup_ani=tx["k_coup_ani"] * s,
        beta1=tx["beta1"], beta2=tx["beta2"],
        gamma1=tx["gamma1"], gamma2=tx["gamma2"],
        delta1=tx["delta1"], delta2=tx["delta2"], xi=tx["xi"],
        n1=np.asarray(tx["n1"]), n2=np.asarray(tx["n2"]))

    gr = mat["growth"]
    s = _scale(gr, ENERGY_SCALE, _join(path, "material.growth.psi_crit_unit"))
    growth = GrowthParams(a1=gr["a1"], a2=gr["a2"],
                          psi_crit=gr["psi_crit"] * s,
                          rho_th=gr["rho_th"], c_cell=gr["c_cell"],
                          tau=gr["tau"], h=gr["h"])

    simulation = SimulationConfig(**sim)
    sp = _scale(strip, STRESS_SCALE, _join(path, "strip.pressure_unit"))
    bvp = {k: v for k, v in strip.items() if k != "pressure_unit"}
    bvp["pressure"] = bvp["pressure"] * sp
    return RunConfig(material=MaterialParams(matrix, collagen, textile,
                                             growth),
                     simulation=simulation, strip=StripConfig(**bvp))


def _join(prefix, dotted):
    return f"{prefix}.{dotted}" if prefix else dotted


def config_to_dict(cfg):
    """Serialize a RunConfig in internal units (round-trips via parse)."""
    m = cfg.material

    def vec(v):
        return [float(x) for x in v]

    return {
        "material": {
            "matrix": {"lam": m.matrix.lam, "mu": m.matrix.mu, "unit": "MPa"},
            "collagen": {"k1": m.collagen.k1, "k2": m.collagen.k2,
                         "kappa": m.collagen.kappa,
                         "axis": vec(m.collagen.a),
                         "rho_f": m.collagen.rho_f, "unit": "MPa"},
            "textile": {"k1_1": m.textile.k1_1, "k2_1": m.textile.k2_1,
                        "beta1": m.textile.beta1, "beta2": m.textile.beta2,
                        "k1_2": m.textile.k1_2, "k2_2": m.textile.k2_2,
                        "gamma1": m.textile.gamma1, "gamma2": m.textile.gamma2,
                        "k_coup1": m.textile.k_coup1,
                        "delta1": m.textile.delta1,
                        "k_coup2": m.textile.k_coup2,
                        "delta2": m.textile.delta2,
                        "k_coup_ani": m.textile.k_coup_ani,
                        "xi": m.textile.xi,
                        "n1": vec(m.textile.n1), "n2": vec(m.textile.n2),
                        "unit": "MPa"},
            "growth": {"a1": m.growth.a1, "a2": m.growth.a2,
                       "psi_crit": m.growth.psi_crit,
                       "psi_crit_unit": "mJ/ug",
                       "rho_th": m.growth.rho_th, "c_cell": m.growth.c_cell,
                       "tau": m.growth.tau, "h": m.growth.h},
        },
        "simulation": dataclasses.asdict(cfg.simulation),
        "strip": {**dataclasses.asdict(cfg.strip), "pressure_unit": "MPa"},
    }


def load_config(path):
    """Read a JSON config file; an empty object yields all defaults."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", path)
    return parse_config(data)


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
