"""Run configuration: document schema, validation, and the device preset.

Configs are YAML (JSON is accepted too) with SI units and explicit unit
suffixes in key names.  Validation is strict and total: unknown keys are
errors, and all problems are collected and reported together rather than one
at a time.  See README.md for the documented schema.
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field

import numpy as np
import yaml

from .constants import ELEMENTARY_CHARGE
from .engine import C_SELF_DEFAULT, T1_PER_QP_DEFAULT, Physics
from .quasiparticles import DispersionParams, QPModel
from .sequencer import CLIFFORD_BASIS
from .transmon import CouplingParams, DecoherenceParams, TransmonParams

TWO_PI = 2.0 * math.pi

EXPERIMENTS = (
    "rabi",
    "chevron",
    "ramsey",
    "rabi2d",
    "staircase",
    "rb",
    "qp-poison",
    "qp-recovery",
    "fit-decay",
    "dispersion",
)


class ConfigError(ValueError):
    """Raised with the full list of validation errors."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass(frozen=True)
class RunConfig:
    """A validated run: experiment name, physics bundle, sweep parameters."""

    experiment: str
    seed: int
    output_dir: str
    shots: int | None
    physics: Physics
    params: dict
    raw: dict = field(repr=False)


# ---------------------------------------------------------------------------
# Preset
# ---------------------------------------------------------------------------


def paper_defaults_dict() -> dict:
    """Full config preset with the measured device parameters and desk-scale
    sweep defaults for every experiment."""
    return {
        "experiment": "rabi",
        "seed": 0,
        "output_dir": ".",
        "shots": None,
        "transmon": {"frequency_hz": 4.958e9, "anharmonicity_hz": -220e6, "dim": 4},
        "coupling": {"c_c_f": 400e-18, "c_f": C_SELF_DEFAULT},
        "decoherence": {
            "t1_s": 23.6e-6,
            "t2_star_s": 24.4e-6,
            "t1_per_qp_s": T1_PER_QP_DEFAULT,
            "qp_dispersion_factor": 1.0,
        },
        "qp": {
            "eta": 1.6e-3,
            "turn_on_slips": 0,
            "trapping_time_s": 17.6e-6,
            "slips_per_cycle": 4,
            "background": 0.10,
        },
        "qp_dispersion": {"gap_ev": 180e-6, "empirical_factor": 1.5},
        "rabi": {
            "subharmonic": 3,
            "detuning_hz": 0.0,
            "durations_s": {"start": 0.0, "stop": 60e-9, "num": 241},
        },
        "chevron": {
            "subharmonic": 3,
            "detunings_hz": {"start": -30e6, "stop": 30e6, "num": 41},
            "durations_s": {"start": 0.0, "stop": 60e-9, "num": 121},
        },
        "ramsey": {
            "subharmonic": 3,
            "detuning_hz": 1e6,
            "delays_s": {"start": 0.0, "stop": 2e-6, "num": 201},
        },
        "rabi2d": {
            "subharmonic": 3,
            "phases_rad": {"start": 0.0, "stop": TWO_PI * 59 / 60, "num": 60},
            "durations_s": {"start": 0.0, "stop": 60e-9, "num": 50},
        },
        "staircase": {
            "subharmonic": 41,
            "detuning_hz": 0.0,
            "durations_s": {"start": 0.0, "stop": 700e-9, "num": 701},
        },
        "rb": {
            "subharmonic": 3,
            "sequence_lengths": [1, 2, 3, 5, 8, 12, 18, 26, 40, 60],
            "randomizations": 20,
            "interleaved_gate": "X/2",
        },
        "qp-poison": {
            "trigger_rate_hz": 1.6e9,
            "slip_counts": [0, 40, 80, 160, 320, 640, 1280, 2560, 5120, 10240, 20480],
        },
        "qp-recovery": {
            "trigger_rate_hz": 1.6e9,
            "poison_slips": 20000,
            "recovery_times_s": {"start": 0.0, "stop": 100e-6, "num": 51},
        },
        "fit-decay": {"input_csv": "decay.csv", "fix": None},
        "dispersion": {
            "trigger_rate_hz": 1.6e9,
            "poison_slips": 20000,
            "recovery_times_s": {"start": 1e-6, "stop": 100e-6, "num": 50},
        },
    }


PRESETS = {"paper-defaults": paper_defaults_dict}


# ---------------------------------------------------------------------------
# Validation machinery
# ---------------------------------------------------------------------------


class _Validator:
    def __init__(self):
        self.errors: list[str] = []

    def error(self, path, message):
        self.errors.append(f"{path}: {message}")

    def check_keys(self, path, data, allowed, required=()):
        for key in data:
            if key not in allowed:
                self.error(f"{path}.{key}" if path else key, "unknown key")
        for key in required:
            if key not in data:
                self.error(f"{path}.{key}" if path else key, "missing required key")

    def number(self, path, data, key, default=None, *, required=False, minimum=None, maximum=None):
        if key not in data or data[key] is None:
            if required:
                self.error(f"{path}.{key}", "missing required key")
                return default
            return default
        v = data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.error(f"{path}.{key}", f"expected a number, got {v!r}")
            return default
        v = float(v)
        if not math.isfinite(v):
            self.error(f"{path}.{key}", "must be finite")
            return default
        if minimum is not None and v < minimum:
            self.error(f"{path}.{key}", f"must be >= {minimum}, got {v}")
        if maximum is not None and v > maximum:
            self.error(f"{path}.{key}", f"must be <= {maximum}, got {v}")
        return v

    def integer(self, path, data, key, default=None, *, required=False, minimum=None):
        if key not in data or data[key] is None:
            if required:
                self.error(f"{path}.{key}", "missing required key")
            return default
        v = data[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.error(f"{path}.{key}", f"expected an integer, got {v!r}")
            return default
        if minimum is not None and v < minimum:
            self.error(f"{path}.{key}", f"must be >= {minimum}, got {v}")
        return v

    def grid(self, path, data, key, *, required=False, minimum=None):
        """A sweep grid: explicit list or {start, stop, num} inclusive linspace."""
        if key not in data or data[key] is None:
            if required:
                self.error(f"{path}.{key}", "missing required key")
            return None
        v = data[key]
        where = f"{path}.{key}"
        if isinstance(v, dict):
            self.check_keys(where, v, {"start", "stop", "num"}, required=("start", "stop", "num"))
            start = self.number(where, v, "start")
            stop = self.number(where, v, "stop")
            num = self.integer(where, v, "num", minimum=1)
            if None in (start, stop, num):
                return None
            values = np.linspace(start, stop, num)
        elif isinstance(v, (list, tuple)):
            if not v:
                self.error(where, "grid must be non-empty")
                return None
            if any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
                self.error(where, "grid entries must be numbers")
                return None
            values = np.asarray(v, dtype=float)
        else:
            self.error(where, f"expected a list or {{start, stop, num}}, got {v!r}")
            return None
        if not np.all(np.isfinite(values)):
            self.error(where, "grid values must be finite")
            return None
        if minimum is not None and values.min() < minimum:
            self.error(where, f"grid values must be >= {minimum}")
        return values


# YAML 1.1 parses exponents without a sign ("4.958e9") as strings; accept
# them as numbers.
_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def _coerce_numbers(obj):
    if isinstance(obj, dict):
        return {k: _coerce_numbers(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_coerce_numbers(v) for v in obj]
    if isinstance(obj, str) and _NUMBER_RE.match(obj.strip()):
        text = obj.strip()
        if re.fullmatch(r"[+-]?\d+", text):
            return int(text)
        return float(text)
    return obj


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _build_physics(v: _Validator, data: dict) -> Physics | None:
    transmon = None
    block = data.get("transmon")
    if not isinstance(block, dict):
        v.error("transmon", "missing required block")
    else:
        v.check_keys("transmon", block, {"frequency_hz", "anharmonicity_hz", "dim"},
                     required=("frequency_hz", "anharmonicity_hz"))
        f = v.number("transmon", block, "frequency_hz", required=True, minimum=0.0)
        a = v.number("transmon", block, "anharmonicity_hz", required=True)
        dim = v.integer("transmon", block, "dim", default=4, minimum=2)
        if None not in (f, a, dim):
            try:
                transmon = TransmonParams(omega10=TWO_PI * f, alpha=TWO_PI * a, dim=dim)
            except ValueError as exc:
                v.error("transmon", str(exc))

    coupling = None
    block = data.get("coupling")
    if not isinstance(block, dict):
        v.error("coupling", "missing required block")
    else:
        v.check_keys("coupling", block, {"c_c_f", "c_f"}, required=("c_c_f", "c_f"))
        c_c = v.number("coupling", block, "c_c_f", required=True, minimum=0.0)
        c = v.number("coupling", block, "c_f", required=True)
        if None not in (c_c, c):
            try:
                coupling = CouplingParams(c_c=c_c, c=c)
            except ValueError as exc:
                v.error("coupling", str(exc))

    decoherence = None
    block = data.get("decoherence")
    if isinstance(block, dict):
        v.check_keys("decoherence", block,
                     {"t1_s", "t2_star_s", "t1_per_qp_s", "qp_dispersion_factor"},
                     required=("t1_s", "t2_star_s"))
        t1 = v.number("decoherence", block, "t1_s", required=True)
        t2 = v.number("decoherence", block, "t2_star_s", required=True)
        t1qp = v.number("decoherence", block, "t1_per_qp_s", default=T1_PER_QP_DEFAULT)
        fac = v.number("decoherence", block, "qp_dispersion_factor", default=1.0)
        if None not in (t1, t2, t1qp, fac):
            try:
                decoherence = DecoherenceParams(
                    t1_residual=t1, t2_star_residual=t2, t1_per_qp=t1qp,
                    qp_dispersion_factor=fac,
                )
            except ValueError as exc:
                v.error("decoherence", str(exc))
    elif block is not None:
        v.error("decoherence", "must be a mapping or null")

    qp = None
    block = data.get("qp")
    if isinstance(block, dict):
        v.check_keys("qp", block,
                     {"eta", "turn_on_slips", "trapping_time_s", "slips_per_cycle", "background"})
        eta = v.number("qp", block, "eta", default=1.6e-3, minimum=0.0)
        n0 = v.integer("qp", block, "turn_on_slips", default=0, minimum=0)
        trap = v.number("qp", block, "trapping_time_s", default=17.6e-6)
        spc = v.integer("qp", block, "slips_per_cycle", default=4, minimum=1)
        bg = v.number("qp", block, "background", default=0.10, minimum=0.0)
        if None not in (eta, n0, trap, spc, bg):
            try:
                qp = QPModel(eta=eta, turn_on_slips=n0, trapping_rate=1.0 / trap,
                             slips_per_cycle=spc, n_qp_background=bg)
            except (ValueError, ZeroDivisionError) as exc:
                v.error("qp", str(exc))
    elif block is not None:
        v.error("qp", "must be a mapping or null")

    dispersion = None
    block = data.get("qp_dispersion")
    if isinstance(block, dict):
        v.check_keys("qp_dispersion", block, {"gap_ev", "empirical_factor"})
        gap = v.number("qp_dispersion", block, "gap_ev", default=180e-6)
        fac = v.number("qp_dispersion", block, "empirical_factor", default=1.5)
        if None not in (gap, fac):
            try:
                dispersion = DispersionParams(delta=gap * ELEMENTARY_CHARGE, empirical_factor=fac)
            except ValueError as exc:
                v.error("qp_dispersion", str(exc))
    elif block is not None:
        v.error("qp_dispersion", "must be a mapping or null")

    if transmon is None or coupling is None:
        return None
    return Physics(transmon=transmon, coupling=coupling, decoherence=decoherence,
                   qp=qp, dispersion=dispersion)


def _validate_experiment_block(v: _Validator, name: str, data: dict) -> dict:
    """Validate one experiment block; returns normalized parameters."""
    block = data.get(name)
    out: dict = {}
    if block is None:
        v.error(name, "missing required block for the selected experiment")
        return out
    if not isinstance(block, dict):
        v.error(name, "must be a mapping")
        return out

    if name in ("rabi", "staircase"):
        allowed = {"subharmonic", "detuning_hz", "durations_s"}
        if name == "rabi":
            allowed.add("bias")
        v.check_keys(name, block, allowed)
        out["subharmonic"] = v.integer(name, block, "subharmonic",
                                       default=(41 if name == "staircase" else 3), minimum=1)
        out["detuning"] = TWO_PI * (v.number(name, block, "detuning_hz", default=0.0) or 0.0)
        out["durations"] = v.grid(name, block, "durations_s", required=True, minimum=0.0)
        out["bias"] = None
        bias = block.get("bias")
        if isinstance(bias, dict):
            v.check_keys("rabi.bias", bias, {"values", "window"}, required=("values",))
            values = v.grid("rabi.bias", bias, "values", required=True)
            window = bias.get("window", [0.7, 0.9])
            if (not isinstance(window, list) or len(window) != 2
                    or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in window)
                    or not window[0] < window[1]):
                v.error("rabi.bias.window", "must be [lo, hi] with lo < hi")
            elif values is not None:
                out["bias"] = {"values": values, "window": (float(window[0]), float(window[1]))}
        elif bias is not None:
            v.error("rabi.bias", "must be a mapping or null")
    elif name == "chevron":
        v.check_keys(name, block, {"subharmonic", "detunings_hz", "durations_s"})
        out["subharmonic"] = v.integer(name, block, "subharmonic", default=3, minimum=1)
        dets = v.grid(name, block, "detunings_hz", required=True)
        out["detunings"] = None if dets is None else TWO_PI * dets
        out["durations"] = v.grid(name, block, "durations_s", required=True, minimum=0.0)
    elif name == "ramsey":
        v.check_keys(name, block, {"subharmonic", "detuning_hz", "delays_s"})
        out["subharmonic"] = v.integer(name, block, "subharmonic", default=3, minimum=1)
        out["detuning"] = TWO_PI * (v.number(name, block, "detuning_hz", default=0.0) or 0.0)
        out["delays"] = v.grid(name, block, "delays_s", required=True, minimum=0.0)
    elif name == "rabi2d":
        v.check_keys(name, block, {"subharmonic", "phases_rad", "durations_s"})
        out["subharmonic"] = v.integer(name, block, "subharmonic", default=3, minimum=1)
        out["phases"] = v.grid(name, block, "phases_rad", required=True)
        out["durations"] = v.grid(name, block, "durations_s", required=True, minimum=0.0)
    elif name == "rb":
        v.check_keys(name, block,
                     {"subharmonic", "sequence_lengths", "randomizations", "interleaved_gate"})
        out["subharmonic"] = v.integer(name, block, "subharmonic", default=3, minimum=1)
        lengths = block.get("sequence_lengths")
        if lengths is None:
            v.error("rb.sequence_lengths", "missing required key")
        elif (not isinstance(lengths, list) or not lengths
              or any(isinstance(x, bool) or not isinstance(x, int) for x in lengths)):
            v.error("rb.sequence_lengths", "must be a non-empty list of integers")
        elif any(b <= a for a, b in zip(lengths, lengths[1:])) or lengths[0] < 1:
            v.error("rb.sequence_lengths", "must be strictly increasing integers >= 1")
        else:
            out["sequence_lengths"] = tuple(lengths)
        out["randomizations"] = v.integer(name, block, "randomizations", default=20, minimum=1)
        inter = block.get("interleaved_gate")
        if inter is not None and inter not in CLIFFORD_BASIS:
            v.error("rb.interleaved_gate", f"must be one of {list(CLIFFORD_BASIS)} or null")
        else:
            out["interleaved_gate"] = inter
    elif name == "qp-poison":
        v.check_keys(name, block, {"trigger_rate_hz", "slip_counts"})
        out["trigger_rate_hz"] = v.number(name, block, "trigger_rate_hz", default=1.6e9, minimum=1.0)
        counts = block.get("slip_counts")
        if (not isinstance(counts, list) or not counts
                or any(isinstance(x, bool) or not isinstance(x, int) or x < 0 for x in counts)):
            v.error("qp-poison.slip_counts", "must be a non-empty list of integers >= 0")
        else:
            out["slip_counts"] = tuple(counts)
    elif name == "qp-recovery":
        v.check_keys(name, block, {"trigger_rate_hz", "poison_slips", "recovery_times_s"})
        out["trigger_rate_hz"] = v.number(name, block, "trigger_rate_hz", default=1.6e9, minimum=1.0)
        out["poison_slips"] = v.integer(name, block, "poison_slips", default=20000, minimum=0)
        out["recovery_times"] = v.grid(name, block, "recovery_times_s", required=True, minimum=0.0)
    elif name == "fit-decay":
        v.check_keys(name, block, {"input_csv", "fix"})
        path = block.get("input_csv")
        if not isinstance(path, str) or not path:
            v.error("fit-decay.input_csv", "must be a non-empty path string")
        else:
            out["input_csv"] = path
        fix = block.get("fix")
        if fix is None:
            out["fix"] = None
        elif isinstance(fix, dict):
            allowed = {"n_qp", "t1_qp", "t1_r"}
            bad = set(fix) - allowed
            if bad:
                v.error("fit-decay.fix", f"unknown parameters {sorted(bad)}")
            elif any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in fix.values()):
                v.error("fit-decay.fix", "fixed values must be numbers")
            else:
                out["fix"] = {k: float(x) for k, x in fix.items()}
        else:
            v.error("fit-decay.fix", "must be a mapping or null")
    elif name == "dispersion":
        v.check_keys(name, block, {"trigger_rate_hz", "poison_slips", "recovery_times_s"})
        out["trigger_rate_hz"] = v.number(name, block, "trigger_rate_hz", default=1.6e9, minimum=1.0)
        out["poison_slips"] = v.integer(name, block, "poison_slips", default=20000, minimum=0)
        out["recovery_times"] = v.grid(name, block, "recovery_times_s", required=True, minimum=0.0)
    else:  # pragma: no cover
        v.error(name, "unhandled experiment block")
    return out


_TOP_KEYS = {
    "experiment", "seed", "output_dir", "shots",
    "transmon", "coupling", "decoherence", "qp", "qp_dispersion", *EXPERIMENTS,
}


def config_from_dict(data: dict) -> RunConfig:
    """Validate a configuration dictionary into a RunConfig.

    Raises ConfigError carrying every problem found, not just the first.
    """
    if not isinstance(data, dict):
        raise ConfigError(["configuration document must be a mapping"])
    v = _Validator()
    v.check_keys("", data, _TOP_KEYS, required=("experiment",))

    experiment = data.get("experiment")
    if experiment is not None and experiment not in EXPERIMENTS:
        v.error("experiment", f"must be one of {list(EXPERIMENTS)}, got {experiment!r}")
        experiment = None

    seed = v.integer("", {"seed": data.get("seed", 0)}, "seed", default=0)
    output_dir = data.get("output_dir", ".")
    if not isinstance(output_dir, str) or not output_dir:
        v.error("output_dir", "must be a non-empty string")
        output_dir = "."
    shots = data.get("shots")
    if shots is not None:
        if isinstance(shots, bool) or not isinstance(shots, int) or shots < 1:
            v.error("shots", f"must be a positive integer or null, got {shots!r}")
            shots = None

    physics = _build_physics(v, data)
    params = _validate_experiment_block(v, experiment, data) if experiment else {}

    if v.errors:
        raise ConfigError(v.errors)
    return RunConfig(
        experiment=experiment,
        seed=int(seed),
        output_dir=output_dir,
        shots=shots,
        physics=physics,
        params=params,
        raw=copy.deepcopy(data),
    )


def parse_config(document: str, *, preset: str | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Parse a YAML/JSON config document into a validated RunConfig.

    ``preset`` merges the named defaults underneath the document; explicit
    document values win.  ``overrides`` (e.g. CLI flags) win over both.
    """
    try:
        data = yaml.safe_load(document) if document.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError([f"document is not valid YAML/JSON: {exc}"]) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(["configuration document must be a mapping"])
    data = _coerce_numbers(data)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError([f"unknown preset {preset!r}; available: {sorted(PRESETS)}"])
        data = _deep_merge(PRESETS[preset](), data)
    if overrides:
        data = _deep_merge(data, overrides)
    return config_from_dict(data)
