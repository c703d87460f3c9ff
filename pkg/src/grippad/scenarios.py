"""Scenario files: experiment definitions for the gripping simulator.

A scenario is a JSON object; ``build_scenario`` produces the four stock
experiments and a file may simply reference one by number plus overrides:

    {"experiment": 3, "controller": "force-only", "seed": 7}

Stock experiments:

1. horizontal transport of a 100 g box at a fixed 2 N grip reference;
2. vertical transport of a 100 g box while its pitch ramps 0->30->0 deg,
   grip force regulated from the limit curve;
3. grip-and-lift of a 200 g box with vertical faces, pads starting 10 deg
   misaligned;
4. same as 3 with 15 deg tilted faces.
"""

from __future__ import annotations

import copy
import hashlib
import json

from .errors import ScenarioFormatError

SCENARIO_FORMAT = "grippad-scenario"

_BASE = {
    "format": SCENARIO_FORMAT,
    "version": 1,
    "name": "custom",
    "experiment": 0,
    "controller": "hybrid",          # hybrid | force-only
    "regulation": "limit-curve",     # limit-curve | fixed
    "seed": 0,
    "mu": 0.5,
    "pad_radius_m": 0.03,
    "control_rate_hz": 85.0,
    "safety_factor": 1.1,
    "noise_sigma_n": 0.01,
    "box": {
        "width_m": 0.12,
        "height_m": 0.08,
        "depth_m": 0.10,
        "mass_kg": 0.1,
        "com_offset_m": [0.0, 0.0, 0.0],
        "face_tilt_deg": 0.0,
        "mu": 0.5,
        "start_y_m": 0.0,
        "start_z_m": 0.15,
    },
    "pads": {
        "spring_stiffness_nm_per_rad": 0.05,
        "normal_stiffness_n_per_m": 2000.0,
        "joint_limit_deg": 25.0,
        "initial_pitch_misalign_deg": 0.0,
    },
    "gains": {
        "k_align_rad_per_m": 0.5,
        "k_force_m_per_n": 2e-4,
        "k_track_m_per_n": 2e-4,
        "cop_deadzone_m": 0.010,
        "force_deadzone_n": 0.05,
        "contact_threshold_n": 0.2,
        "f_d1_n": 0.3,
        "f_d2_n": 2.0,
    },
    "planner": {
        "n_nodes": 12,
        "n_interp": 8,
        "q_weight": 1.0,
        "u_weight": 500.0,
        "tolerance": 1e-6,
        "min_clearance_m": 0.005,
    },
    "grip": {
        "initial_gap_m": 0.003,
        "max_ticks": 900,
        "settle_window": 30,
    },
    "motion": {
        "legs": [],
        "dwell_nodes": 0,
        "start_grounded": False,
        "box_pitch_profile_deg": [[0.0, 0.0], [1.0, 0.0]],
    },
}


def build_scenario(experiment: int, **overrides) -> dict:
    """Stock scenario for experiment 1..4 with optional field overrides."""
    sc = copy.deepcopy(_BASE)
    sc["experiment"] = experiment
    if experiment == 1:
        sc["name"] = "experiment-1-horizontal"
        sc["regulation"] = "fixed"
        sc["motion"]["legs"] = [{"dy_m": 0.05, "dz_m": 0.0}, {"dy_m": -0.05, "dz_m": 0.0}]
    elif experiment == 2:
        sc["name"] = "experiment-2-vertical-rotating"
        sc["box"]["com_offset_m"] = [0.0, 0.0, -0.03]
        sc["motion"]["legs"] = [{"dy_m": 0.0, "dz_m": 0.08}]
        sc["motion"]["dwell_nodes"] = 2
        sc["motion"]["box_pitch_profile_deg"] = [[0.0, 0.0], [0.5, 30.0], [1.0, 0.0]]
        sc["planner"]["n_nodes"] = 16
    elif experiment == 3:
        sc["name"] = "experiment-3-lift-vertical-faces"
        sc["box"]["mass_kg"] = 0.2
        sc["box"]["com_offset_m"] = [0.015, 0.0, 0.0]
        sc["pads"]["initial_pitch_misalign_deg"] = 10.0
        sc["motion"]["legs"] = [{"dy_m": 0.0, "dz_m": 0.06}]
        sc["motion"]["dwell_nodes"] = 4
        sc["motion"]["start_grounded"] = True
    elif experiment == 4:
        sc["name"] = "experiment-4-lift-tilted-faces"
        sc["box"]["mass_kg"] = 0.2
        sc["box"]["com_offset_m"] = [0.015, 0.0, 0.0]
        sc["box"]["face_tilt_deg"] = 15.0
        sc["pads"]["initial_pitch_misalign_deg"] = 10.0
        sc["motion"]["legs"] = [{"dy_m": 0.0, "dz_m": 0.06}]
        sc["motion"]["dwell_nodes"] = 4
        sc["motion"]["start_grounded"] = True
    elif experiment != 0:
        raise ScenarioFormatError(f"unknown stock experiment {experiment}; expected 1..4")
    _apply_overrides(sc, overrides)
    validate_scenario(sc)
    return sc


def _apply_overrides(sc: dict, overrides: dict) -> None:
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(sc.get(key), dict):
            sc[key].update(value)
        else:
            sc[key] = value


def _merge_defaults(base: dict, given: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in given.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge_defaults(out[key], value)
        else:
            out[key] = value
    return out


def validate_scenario(sc: dict) -> None:
    if sc.get("format") != SCENARIO_FORMAT:
        raise ScenarioFormatError(f"not a {SCENARIO_FORMAT} document")
    if sc.get("controller") not in ("hybrid", "force-only"):
        raise ScenarioFormatError(f"controller must be hybrid or force-only, got {sc.get('controller')!r}")
    if sc.get("regulation") not in ("limit-curve", "fixed"):
        raise ScenarioFormatError(f"regulation must be limit-curve or fixed, got {sc.get('regulation')!r}")
    box = sc.get("box", {})
    if box.get("mass_kg", 0) <= 0:
        raise ScenarioFormatError("box mass must be positive")
    if not (0.0 <= box.get("face_tilt_deg", 0.0) <= 20.0):
        raise ScenarioFormatError("face tilt must be within [0, 20] degrees")
    com = box.get("com_offset_m", [0, 0, 0])
    half = (box["width_m"] / 2, box["depth_m"] / 2, box["height_m"] / 2)
    if abs(com[0]) > half[0] or abs(com[1]) > half[1] or abs(com[2]) > half[2]:
        raise ScenarioFormatError("box CoM offset must lie inside the box")
    if sc.get("mu", 0) <= 0 or sc.get("pad_radius_m", 0) <= 0:
        raise ScenarioFormatError("mu and pad radius must be positive")
    if not sc.get("motion", {}).get("legs"):
        raise ScenarioFormatError("scenario must define at least one motion leg")
    profile = sc["motion"].get("box_pitch_profile_deg", [])
    if len(profile) < 2 or profile[0][0] != 0.0 or profile[-1][0] != 1.0:
        raise ScenarioFormatError("box pitch profile must span progress 0..1")
    if any(p1[0] > p2[0] for p1, p2 in zip(profile, profile[1:])):
        raise ScenarioFormatError("box pitch profile progress must be non-decreasing")


def load_scenario(path) -> dict:
    """Load a scenario file, expanding stock-experiment references."""
    try:
        with open(path) as fh:
            given = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(given, dict):
        raise ScenarioFormatError(f"{path}: scenario must be a JSON object")
    exp = given.get("experiment", 0)
    if exp:
        base = build_scenario(int(exp))
    else:
        base = copy.deepcopy(_BASE)
    sc = _merge_defaults(base, given)
    sc["format"] = SCENARIO_FORMAT
    validate_scenario(sc)
    return sc


def write_scenario(path, scenario: dict) -> None:
    validate_scenario(scenario)
    with open(path, "w") as fh:
        json.dump(scenario, fh, indent=2, sort_keys=True)
        fh.write("\n")


def scenario_hash(scenario: dict) -> str:
    canonical = json.dumps(scenario, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def box_pitch_at(scenario: dict, progress: float) -> float:
    """Piecewise-linear box pitch (radians) at normalized run progress."""
    import numpy as np

    profile = scenario["motion"]["box_pitch_profile_deg"]
    xs = [p[0] for p in profile]
    ys = [p[1] for p in profile]
    return float(np.deg2rad(np.interp(np.clip(progress, 0.0, 1.0), xs, ys)))
