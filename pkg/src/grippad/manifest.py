"""Run manifests: every output directory records the exact inputs that
produced it, so runs can be reproduced and outputs traced back."""

from __future__ import annotations

import json
from datetime import datetime, timezone

from .scenarios import scenario_hash


def make_manifest(command: str, scenario: dict | None = None, **extra) -> dict:
    from . import __version__

    manifest = {
        "format": "grippad-manifest",
        "version": 1,
        "tool_version": __version__,
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if scenario is not None:
        manifest["scenario_hash_sha256"] = scenario_hash(scenario)
        manifest["seed"] = scenario.get("seed")
        manifest["effective_parameters"] = {
            "mu": scenario.get("mu"),
            "pad_radius_m": scenario.get("pad_radius_m"),
            "controller": scenario.get("controller"),
            "regulation": scenario.get("regulation"),
            "safety_factor": scenario.get("safety_factor"),
            "control_rate_hz": scenario.get("control_rate_hz"),
            "noise_sigma_n": scenario.get("noise_sigma_n"),
            "gains": scenario.get("gains"),
            "planner": scenario.get("planner"),
        }
    manifest.update(extra)
    return manifest


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
