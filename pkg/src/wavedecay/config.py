"""Experiment configuration: an INI file with typed sections.

Every mode starts from built-in defaults; a config file and command-line
tolerance overrides are layered on top.  Unknown sections or keys, values of
the wrong type and unknown profile names are all rejected with a message
naming the offending field.

Sections
--------
``[experiment]``
    ``mode``, ``seed``, ``out``.
``[data]``, ``[potential]``, ``[source]``
    ``profile`` plus keyword parameters of that profile (floats).
``[sweep]``
    ``p_values``, ``pairs`` (``p:q`` items), ``t_min``, ``t_max``, ``n``,
    ``random_samples``, ``quad_rtol``.
``[solver]``
    ``grid_step``, ``panel_width``, ``order``, ``density``, ``stop_tol``,
    ``n_max``, ``sample_t``, ``sample_r``, ``horizon``, ``refine``.
``[fd]``
    ``dr``, ``cfl``, ``t_final``, ``observers``, ``record_every``,
    ``energy_every``, ``window``, ``refine``.
``[tolerance]``
    Pass/fail thresholds, see :data:`TOLERANCES`.

Lists are comma separated.
"""
from __future__ import annotations

import configparser
import copy
import hashlib
import json
from dataclasses import dataclass, field

from .profiles import DATA_PROFILES, POTENTIAL_PROFILES, SOURCE_PROFILES, make_data, make_potential, make_source

__all__ = [
    "MODES",
    "TOLERANCES",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_tolerance_overrides",
]

MODES = ("constants", "lemma1", "lemma2", "solve", "solve-source", "oracle", "compare", "tail", "energy")

# default pass/fail thresholds
TOLERANCES = {
    "sphere_bound": 1e-9,  # worst LHS/RHS <= 1 + this
    "closed_form": 1e-10,  # closed form vs adaptive quadrature, relative
    "cone_bound": 1e-4,  # quadrature error budget of the cone integral
    "interp_budget": 1e-3,  # slack on the measured contraction ratio
    "decay_bound": 1e-6,  # weight |u| <= C (1 + this)
    "oracle_free": 1e-3,  # FD vs exact free solution, relative sup
    "compare": 1e-2,  # Duhamel vs FD, relative sup
    "refine_gain": 2.0,  # minimum discrepancy reduction under refinement
    "energy_drift": 1e-4,
    "energy_refine": 0.3,  # drift(dr/2) <= this * drift(dr)
    "tail": 0.5,  # |exponent - k|
}


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _pairs(text: str) -> list:
    out = []
    for item in text.split(","):
        if item.strip():
            p, q = item.split(":")
            out.append([float(p), float(q)])
    return out


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_TYPED = {
    "experiment": {"mode": str, "seed": int, "out": str},
    "sweep": {
        "p_values": _floats,
        "pairs": _pairs,
        "t_min": float,
        "t_max": float,
        "n": int,
        "random_samples": int,
        "quad_rtol": float,
    },
    "solver": {
        "grid_step": float,
        "panel_width": float,
        "order": int,
        "density": float,
        "stop_tol": float,
        "n_max": int,
        "sample_t": _floats,
        "sample_r": _floats,
        "horizon": float,
        "refine": _bool,
    },
    "fd": {
        "dr": float,
        "cfl": float,
        "t_final": float,
        "observers": _floats,
        "record_every": int,
        "energy_every": int,
        "window": _floats,
        "refine": _bool,
    },
    "tolerance": {k: float for k in TOLERANCES},
}
_PROFILE_SECTIONS = {"data": DATA_PROFILES, "potential": POTENTIAL_PROFILES, "source": SOURCE_PROFILES}

_BASE = {
    "experiment": {"seed": 0},
    "data": {"profile": "model", "f0": 1.0, "f1": 1.0, "g0": 1.0, "m": 4.0},
    "potential": {"profile": "model", "V0": 0.003, "k": 3.0},
    "source": {"profile": "model", "F0": 1.0, "q": 3.0, "r_exp": 3.0},
    "sweep": {
        "p_values": [2.5, 3.0, 3.5, 4.0, 6.0],
        "pairs": [[2.5, 2.5], [3.0, 3.0], [2.5, 4.0], [3.0, 4.0]],
        "t_min": 1e-2,
        "t_max": 1e2,
        "n": 25,
        "random_samples": 1000,
        "quad_rtol": 1e-6,
    },
    "solver": {
        "grid_step": 0.5,
        "panel_width": 1.0,
        "order": 6,
        "density": 1.0,
        "stop_tol": 1e-8,
        "n_max": 50,
        "sample_t": [float(v) for v in range(11)],
        "sample_r": [0.1, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        "horizon": 20.0,
        "refine": False,
    },
    "fd": {
        "dr": 0.05,
        "cfl": 0.5,
        "t_final": 20.0,
        "observers": [0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
        "record_every": 1,
        "energy_every": 1,
        "window": [50.0, 200.0],
        "refine": False,
    },
    "tolerance": dict(TOLERANCES),
}

_GAUSSIAN = {"profile": "gaussian", "amp_f": 1.0, "amp_g": 0.5, "width": 1.0, "m": 4.0}

# per-mode changes to the base defaults
_MODE_DEFAULTS = {
    "lemma2": {"sweep": {"t_max": 20.0}},
    "compare": {
        "data": _GAUSSIAN,
        "solver": {
            "sample_t": [2.0 * i for i in range(11)],
            "sample_r": [0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
            "horizon": 30.0,
            "refine": True,
        },
        "fd": {"dr": 0.05, "t_final": 20.0, "refine": True},
    },
    "oracle": {"data": _GAUSSIAN, "potential": {"profile": "zero", "k": 3.0}, "fd": {"dr": 0.025}},
    "energy": {"data": _GAUSSIAN, "fd": {"dr": 0.01, "t_final": 50.0, "observers": [1.0], "refine": True}},
    # g-only data: f-only data has a faster t^-(k+1) tail at fixed radius.
    # cfl = 1 makes the free scheme exact; below it grid dispersion swamps the tail
    "tail": {
        "data": {"profile": "bump", "amp_f": 0.0, "amp_g": 1.0, "radius": 2.0, "m": 4.0},
        "fd": {"dr": 0.05, "cfl": 1.0, "t_final": 200.0, "observers": [1.0]},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    """Resolved settings of one run (defaults merged with the user's file)."""

    mode: str
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections[name]

    @property
    def seed(self) -> int:
        return int(self.sections["experiment"]["seed"])

    @property
    def tolerances(self) -> dict:
        return self.sections["tolerance"]

    def profile_params(self, name: str) -> tuple[str, dict]:
        sec = dict(self.sections[name])
        return sec.pop("profile"), sec

    def canonical(self) -> dict:
        """Everything that affects results; the output directory is left out."""
        secs = copy.deepcopy(self.sections)
        secs["experiment"].pop("out", None)
        return {"mode": self.mode, "sections": secs}

    def hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def build_data(self):
        name, params = self.profile_params("data")
        return make_data(name, **params)

    def build_potential(self):
        name, params = self.profile_params("potential")
        return make_potential(name, **params)

    def build_source(self):
        name, params = self.profile_params("source")
        return make_source(name, **params)


def defaults(mode: str) -> dict:
    """Default sections for ``mode``."""
    if mode not in MODES:
        raise ConfigError(f"experiment.mode: unknown mode {mode!r}; choose from {', '.join(MODES)}")
    secs = copy.deepcopy(_BASE)
    for name, vals in _MODE_DEFAULTS.get(mode, {}).items():
        if name in _PROFILE_SECTIONS and "profile" in vals:
            secs[name] = dict(vals)
        else:
            secs[name].update(copy.deepcopy(vals))
    secs["experiment"]["mode"] = mode
    return secs


def _parse_value(section: str, key: str, raw: str):
    if section in _PROFILE_SECTIONS:
        if key == "profile":
            return raw.strip()
        conv = float
    else:
        if key not in _TYPED[section]:
            raise ConfigError(f"{section}.{key}: unknown key; expected one of {sorted(_TYPED[section])}")
        conv = _TYPED[section][key]
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} ({exc})") from None


def parse_tolerance_overrides(items) -> dict:
    """``["compare=2e-2", ...]`` to a dict, validating names and values."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"tolerance override {item!r}: expected KEY=VALUE")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in TOLERANCES:
            raise ConfigError(f"tolerance.{key}: unknown tolerance; expected one of {sorted(TOLERANCES)}")
        out[key] = _parse_value("tolerance", key, raw)
    return out


def _read_ini(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep V0, F0 as written
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return cp


def load_config(path=None, mode: str | None = None, tolerance_overrides=None) -> ExperimentConfig:
    """Resolve defaults, an optional INI file and tolerance overrides.

    ``mode`` (from the subcommand) must agree with ``experiment.mode`` in the
    file when both are given.
    """
    cp = _read_ini(path) if path is not None else None
    file_mode = cp.get("experiment", "mode", fallback=None) if cp is not None else None
    if mode and file_mode and mode != file_mode.strip():
        raise ConfigError(f"experiment.mode: file says {file_mode.strip()!r} but the command is {mode!r}")
    mode = mode or (file_mode.strip() if file_mode else None)
    if not mode:
        raise ConfigError("experiment.mode: no mode given")
    secs = defaults(mode)
    if cp is not None:
        for name in cp.sections():
            if name not in secs:
                raise ConfigError(f"[{name}]: unknown section; expected one of {sorted(secs)}")
            items = {k: _parse_value(name, k, v) for k, v in cp.items(name)}
            if name in _PROFILE_SECTIONS and "profile" in items and items["profile"] != secs[name].get("profile"):
                secs[name] = {}  # a different profile takes none of the old defaults
            secs[name].update(items)
    secs["tolerance"].update(parse_tolerance_overrides(tolerance_overrides))
    cfg = ExperimentConfig(mode=mode, sections=secs)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    builders = {"data": cfg.build_data, "potential": cfg.build_potential, "source": cfg.build_source}
    for name, build in builders.items():
        if "profile" not in cfg.sections[name]:
            raise ConfigError(f"{name}.profile: missing")
        try:
            build()
        except (KeyError, ValueError) as exc:
            msg = exc.args[0] if exc.args else str(exc)
            raise ConfigError(f"{name}: {msg}") from None
    sw, so, fd = cfg.sections["sweep"], cfg.sections["solver"], cfg.sections["fd"]
    if not 0 < sw["t_min"] < sw["t_max"]:
        raise ConfigError("sweep.t_min, sweep.t_max: need 0 < t_min < t_max")
    if sw["n"] < 2:
        raise ConfigError("sweep.n: need at least 2 points")
    if sw["random_samples"] < 0:
        raise ConfigError("sweep.random_samples: must be >= 0")
    if any(len(p) != 2 for p in sw["pairs"]):
        raise ConfigError("sweep.pairs: items must be p:q")
    for key in ("grid_step", "panel_width", "density", "stop_tol", "horizon"):
        if not so[key] > 0:
            raise ConfigError(f"solver.{key}: must be positive")
    if not so["sample_t"] or not so["sample_r"]:
        raise ConfigError("solver.sample_t, solver.sample_r: must be non-empty")
    if min(so["sample_t"]) < 0 or min(so["sample_r"]) < 0:
        raise ConfigError("solver.sample_t, solver.sample_r: must be >= 0")
    if not fd["dr"] > 0:
        raise ConfigError("fd.dr: must be positive")
    if not 0 < fd["cfl"] <= 1:
        raise ConfigError("fd.cfl: must lie in (0, 1]")
    if not fd["t_final"] > 0:
        raise ConfigError("fd.t_final: must be positive")
    if not fd["observers"] or min(fd["observers"]) < 0:
        raise ConfigError("fd.observers: need at least one radius >= 0")
    if fd["record_every"] < 1 or fd["energy_every"] < 1:
        raise ConfigError("fd.record_every, fd.energy_every: must be >= 1")
    if len(fd["window"]) != 2 or not 0 < fd["window"][0] < fd["window"][1]:
        raise ConfigError("fd.window: need two values 0 < lo < hi")
    for key, val in cfg.tolerances.items():
        if not val >= 0:
            raise ConfigError(f"tolerance.{key}: must be >= 0")
