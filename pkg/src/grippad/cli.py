"""Command-line interface: calibrate / limit-curve / plan / simulate / report.

Exit codes are a stable contract: 0 success, 2 input or format error,
3 numerical failure, 4 simulation integrity error.  The GRIP_LOG_LEVEL
environment variable sets the logging level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__, contact, manifest, scenarios, sensing
from .errors import (
    DegenerateFitError,
    GrippadError,
    InfeasibleGripError,
    PlanningError,
    QuadratureAccuracyError,
    ScenarioFormatError,
    SimulationIntegrityError,
    TraceSchemaError,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_INTEGRITY = 4

_INPUT_ERRORS = (ScenarioFormatError, TraceSchemaError, FileNotFoundError, IsADirectoryError)
_NUMERIC_ERRORS = (DegenerateFitError, PlanningError, QuadratureAccuracyError,
                   InfeasibleGripError, np.linalg.LinAlgError)


def _setup_logging():
    level = os.environ.get("GRIP_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_scenario_with_flags(args) -> dict:
    sc = scenarios.load_scenario(args.config)
    if getattr(args, "seed", None) is not None:
        sc["seed"] = int(args.seed)
    if getattr(args, "controller", None):
        sc["controller"] = args.controller
        if args.controller == "force-only":
            sc["regulation"] = "fixed"
    if getattr(args, "mu", None) is not None:
        sc["mu"] = float(args.mu)
        sc["box"]["mu"] = float(args.mu)
    if getattr(args, "radius_m", None) is not None:
        sc["pad_radius_m"] = float(args.radius_m)
    scenarios.validate_scenario(sc)
    return sc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_calibrate(args) -> int:
    geometry = sensing.PadGeometry.default(args.radius_m)
    rows = sensing.load_calibration_csv(args.dataset)
    pairs = sensing.dataset_rows_to_pairs(rows, geometry)
    if len(pairs) < 18:
        log.warning("dataset has %d samples; 18+ recommended", len(pairs))
    params = sensing.fit_cop_correction(pairs, geometry)
    mae_before = sensing.cop_mae(pairs, None, geometry)
    mae_after = sensing.cop_mae(pairs, params, geometry)

    os.makedirs(args.out, exist_ok=True)
    blob = sensing.calibration_to_json(params, geometry, mae_before, mae_after)
    out_path = os.path.join(args.out, "calibration.json")
    sensing.save_calibration(out_path, blob)
    manifest.write_manifest(
        os.path.join(args.out, "manifest.json"),
        manifest.make_manifest("calibrate", dataset=str(args.dataset),
                               samples=len(pairs), outputs=["calibration.json"]),
    )
    print(f"CoP MAE before: {mae_before * 1e3:.4f} mm")
    print(f"CoP MAE after:  {mae_after * 1e3:.4f} mm")
    print(f"calibration written to {out_path}")
    return EXIT_OK


def cmd_limit_curve(args) -> int:
    field = contact.PressureField.from_cop_offset(
        args.normal_force, args.radius_m, np.array([args.cop_offset_m, 0.0]))
    curve = contact.limit_curve(field, args.mu, n_cors=args.samples)

    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "limit_curve.csv")
    with open(csv_path, "w") as fh:
        fh.write("force_n,torque_nm\n")
        for f, t in curve.samples:
            fh.write(f"{f!r},{t!r}\n")
    blob = {
        "mu": args.mu,
        "normal_force_n": args.normal_force,
        "radius_m": args.radius_m,
        "cop_offset_m": curve.cop_offset,
        "f_max_n": curve.f_max,
        "tau_max_nm": curve.tau_max,
        "a_n": curve.a_n.tolist(),
        "d_i": curve.d_i.tolist(),
        "b_n": curve.b_n.tolist(),
        "samples": len(curve.samples),
        "samples_csv": "limit_curve.csv",
    }
    json_path = os.path.join(args.out, "limit_curve.json")
    with open(json_path, "w") as fh:
        json.dump(blob, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(blob, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_plan(args) -> int:
    from .experiment import plan_scenario_trajectory
    from .planner import segment_force_reference, interpolate_segment
    from .sim import GripSimulator

    sc = _load_scenario_with_flags(args)
    sim = GripSimulator(sc)
    # nominal grip poses without running the controllers: squeeze such that
    # the normal reaction equals the task setpoint
    squeeze = sim.gains.f_d2 / sim.pads["left"].normal_stiffness
    from .kinematics import PadPose
    half = sim.box.depth / 2
    mis = np.deg2rad(sc["pads"]["initial_pitch_misalign_deg"])
    sim.pads["left"].pose = PadPose(sim.box_y - half + squeeze, sim.box_z,
                                    sim.box.flush_pitch("left") + mis)
    sim.pads["right"].pose = PadPose(sim.box_y + half - squeeze, sim.box_z,
                                     sim.box.flush_pitch("right") - mis)
    traj = plan_scenario_trajectory(sc, sim)

    # per-segment grip-force references from the a-priori load profile
    n_seg = traj.n_nodes - 1
    refs = np.zeros(n_seg)
    for k in range(n_seg):
        configs = interpolate_segment(traj.nodes[k], traj.nodes[k + 1],
                                      sim.planner_config.n_interp)
        prog = (k + np.linspace(0, 1, sim.planner_config.n_interp + 1)) / n_seg
        pitches = [sim.box_pitch_at(p) for p in prog]
        base = segment_force_reference(configs, sim.box, sim.mu, sim.pad_radius,
                                       sim.arm, box_pitches=pitches)
        refs[k] = max(float(sc["safety_factor"]) * base, sim.gains.f_d1)
    traj.force_refs = refs

    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "trajectory.json")
    blob = traj.to_json()
    blob["meta"]["scenario_name"] = sc["name"]
    with open(out_path, "w") as fh:
        json.dump(blob, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.write_manifest(
        os.path.join(args.out, "manifest.json"),
        manifest.make_manifest("plan", sc, outputs=["trajectory.json"]),
    )
    print(f"trajectory with {traj.n_nodes} nodes written to {out_path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .experiment import run_experiment

    sc = _load_scenario_with_flags(args)
    result = run_experiment(sc, out_dir=args.out)
    s = result.summary
    print(f"scenario:        {s['scenario_name']} (controller: {s['controller']})")
    print(f"ticks:           {s['ticks']}")
    settle = s["settling_time_s"]
    print(f"settling time:   {'-' if settle is None else f'{settle:.3f} s'}")
    print(f"force MAE:       {s['force_mae_n']:.4f} N")
    print(f"max CoP dist:    {s['max_cop_distance_mm']:.4f} mm")
    print(f"slip events:     {s['slip_events']}")
    print(f"outputs in {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import run_report

    table = run_report(args.traces, args.out, deadzone=args.deadzone_n,
                       figures=not args.no_figures)
    print(table)
    print(f"report data written to {os.path.join(args.out, 'report.dat')}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grippad",
        description="Force-sensing gripper pads: calibration, limit curves, "
                    "planning, simulation, and reports.",
    )
    parser.add_argument("--version", action="version", version=f"grippad {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit the CoP correction from a dataset CSV")
    p.add_argument("--dataset", required=True, help="calibration CSV path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--radius-m", type=float, default=contact.DEFAULT_RADIUS)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("limit-curve", help="sample a friction limit curve")
    p.add_argument("--mu", type=float, default=contact.DEFAULT_MU)
    p.add_argument("--normal-force", type=float, default=2.0, help="N")
    p.add_argument("--radius-m", type=float, default=contact.DEFAULT_RADIUS)
    p.add_argument("--cop-offset-m", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=96, help="CoR sample count (>= 32)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_limit_curve)

    p = sub.add_parser("plan", help="plan a scenario trajectory")
    p.add_argument("--config", required=True, help="scenario JSON path")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--controller", choices=("hybrid", "force-only"))
    p.add_argument("--mu", type=float)
    p.add_argument("--radius-m", type=float)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run a scenario end to end")
    p.add_argument("--config", required=True, help="scenario JSON path")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--controller", choices=("hybrid", "force-only"))
    p.add_argument("--mu", type=float)
    p.add_argument("--radius-m", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="compare traces; emit table, data file, figures")
    p.add_argument("traces", nargs="+", help="trace CSV paths")
    p.add_argument("--out", required=True)
    p.add_argument("--deadzone-n", type=float, default=0.05)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SimulationIntegrityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GrippadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
