"""End-to-end experiment runs: grip, plan, track, and emit artifacts.

``run_experiment`` drives one scenario through the full pipeline:

1. approach-and-grip with the integral force controller (plus alignment
   for the hybrid controller) until the task setpoint settles;
2. record the gripped pad separation and orientations, solve inverse
   kinematics, and plan the motion legs by direct collocation;
3. track the trajectory tick by tick with the selected controller;
4. summarize the trace and optionally write trace/summary/manifest files.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

from . import manifest as manifest_mod
from . import planner, scenarios
from .errors import PlanningError
from .kinematics import PadPose, ik_dual
from .sim import GripSimulator
from .trace import SimTrace, write_summary

log = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    scenario: dict
    simulator: GripSimulator
    trajectory: planner.Trajectory
    summary: dict
    grip_settled: bool

    @property
    def trace(self) -> SimTrace:
        return self.simulator.trace


def plan_scenario_trajectory(scenario: dict, sim: GripSimulator) -> planner.Trajectory:
    """Plan all motion legs from the simulator's current gripped poses."""
    arm = sim.arm
    cfg = sim.planner_config
    pose_l, pose_r = sim.commanded_poses()
    q_cur = ik_dual(arm, pose_l, pose_r)
    fk_l, fk_r = arm.fk(q_cur)
    ds_rel = fk_l.y - fk_r.y

    traj = None
    for leg in scenario["motion"]["legs"]:
        cur_l, cur_r = arm.fk(q_cur)
        goal_l = PadPose(cur_l.y + leg["dy_m"], cur_l.z + leg["dz_m"], cur_l.pitch)
        goal_r = PadPose(cur_r.y + leg["dy_m"], cur_r.z + leg["dz_m"], cur_r.pitch)
        q_goal = ik_dual(arm, goal_l, goal_r, seed=q_cur)
        leg_traj = planner.plan_trajectory(q_cur, q_goal, ds_rel, arm, cfg)
        traj = leg_traj if traj is None else traj.concatenate(leg_traj)
        q_cur = q_goal
    if traj is None:
        raise PlanningError("scenario defines no motion legs")
    dwell = int(scenario["motion"].get("dwell_nodes", 0))
    return traj.prepend_dwell(dwell)


def run_experiment(scenario: dict, out_dir=None) -> ExperimentResult:
    """Run one scenario end to end; optionally write outputs to a directory."""
    scenarios.validate_scenario(scenario)
    controller = scenario["controller"]
    regulation = scenario["regulation"]

    sim = GripSimulator(scenario)
    settled = sim.run_grip_phase(controller)
    if not settled:
        log.warning("grip phase did not settle within its tick budget")

    traj = plan_scenario_trajectory(scenario, sim)
    planner.run_tracking(
        traj, sim, sim.gains,
        controller=controller,
        regulation=regulation,
        safety_factor=float(scenario["safety_factor"]),
    )

    window = int(scenario["grip"]["settle_window"])
    summary = sim.trace.summary(sim.gains.force_deadzone, window=window)
    summary.update({
        "scenario_name": scenario["name"],
        "experiment": scenario["experiment"],
        "controller": controller,
        "regulation": regulation,
        "seed": scenario["seed"],
        "grip_settled": settled,
        "trajectory_nodes": traj.n_nodes,
        "force_refs_n": traj.force_refs.tolist(),
    })

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        sim.trace.write_csv(os.path.join(out_dir, "trace.csv"))
        write_summary(os.path.join(out_dir, "summary.json"), summary)
        mf = manifest_mod.make_manifest(
            "simulate", scenario,
            outputs=["trace.csv", "summary.json"],
            grip_settled=settled,
        )
        manifest_mod.write_manifest(os.path.join(out_dir, "manifest.json"), mf)

    return ExperimentResult(
        scenario=scenario,
        simulator=sim,
        trajectory=traj,
        summary=summary,
        grip_settled=settled,
    )
