"""Dual-arm trajectory optimization and task-space tracking.

Planning is direct collocation over joint configurations: nodes q[k] with
controls u[k] = q[k+1] - q[k], a goal-attraction + control-smoothness
cost, and equality constraints that keep the two pads rigidly coupled
(fixed relative translation, frozen orientations) plus joint limits and
obstacle clearance.  Equalities are enforced with a quadratic-penalty
Gauss-Newton loop using analytic arm Jacobians; joint limits by step
projection.

Tracking follows the planned nodes tick by tick: each control node solves
a small nearest-configuration NLP that offsets the nominal pad poses by
the force controller's accumulated pad advance and the alignment
controller's accumulated pitch corrections.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import contact, control
from .errors import PlanningError
from .kinematics import ArmModel, arm_clearance, wrap_angle

log = logging.getLogger(__name__)


@dataclass
class PlannerConfig:
    """Collocation sizes, cost weights, tolerances, obstacle geometry."""

    n_nodes: int = 20
    n_interp: int = 10
    q_weight: float = 1.0
    u_weight: float = 500.0
    tolerance: float = 1e-6
    min_clearance: float = 0.005
    obstacles: list = field(default_factory=list)  # rectangle corner arrays
    max_iterations: int = 500

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("need at least two trajectory nodes")
        if self.n_interp < 1:
            raise ValueError("interpolation count must be at least 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


def chain_nodes(nodes) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild a node sequence by accumulating its own differences.

    Guarantees nodes[k] + controls[k] == nodes[k+1] bitwise (the chained
    nodes are literally built that way); the rebuilt nodes differ from the
    input by at most a few ulps.
    """
    nodes = np.asarray(nodes, dtype=float)
    controls = np.diff(nodes, axis=0)
    chained = np.empty_like(nodes)
    chained[0] = nodes[0]
    for k in range(len(controls)):
        chained[k + 1] = chained[k] + controls[k]
        controls[k] = chained[k + 1] - chained[k]
        chained[k + 1] = chained[k] + controls[k]
    return chained, controls


@dataclass
class Trajectory:
    """Planned joint trajectory with per-segment grip-force references.

    ``controls[k]`` is exactly ``nodes[k+1] - nodes[k]``; ``force_refs``
    has one entry per segment and is filled by the tracking loop (or the
    planning CLI) once the load profile is known.
    """

    nodes: np.ndarray
    controls: np.ndarray
    ds_rel: float
    force_refs: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.controls = np.asarray(self.controls, dtype=float)
        if self.force_refs is None:
            self.force_refs = np.zeros(max(len(self.nodes) - 1, 0))
        else:
            self.force_refs = np.asarray(self.force_refs, dtype=float)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def prepend_dwell(self, n: int) -> "Trajectory":
        """Repeat the first node ``n`` extra times (zero-control dwell)."""
        if n <= 0:
            return self
        pad = np.repeat(self.nodes[0:1], n, axis=0)
        nodes, controls = chain_nodes(np.vstack([pad, self.nodes]))
        return Trajectory(nodes=nodes, controls=controls,
                          ds_rel=self.ds_rel, meta=dict(self.meta))

    def concatenate(self, other: "Trajectory") -> "Trajectory":
        """Join two legs that share a boundary node."""
        if not np.allclose(self.nodes[-1], other.nodes[0], atol=1e-12):
            raise PlanningError("cannot concatenate trajectories with mismatched boundary")
        nodes, controls = chain_nodes(np.vstack([self.nodes, other.nodes[1:]]))
        return Trajectory(nodes=nodes, controls=controls,
                          ds_rel=self.ds_rel, meta=dict(self.meta))

    def to_json(self) -> dict:
        return {
            "format": "grippad-trajectory",
            "version": 1,
            "units": {"angle": "rad", "length": "m", "force": "N"},
            "ds_rel_m": self.ds_rel,
            "nodes_rad": self.nodes.tolist(),
            "controls_rad": self.controls.tolist(),
            "force_refs_n": self.force_refs.tolist(),
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, blob: dict) -> "Trajectory":
        if blob.get("format") != "grippad-trajectory":
            raise PlanningError("not a grippad trajectory file")
        return cls(
            nodes=np.array(blob["nodes_rad"], dtype=float),
            controls=np.array(blob["controls_rad"], dtype=float),
            ds_rel=float(blob["ds_rel_m"]),
            force_refs=np.array(blob["force_refs_n"], dtype=float),
            meta=blob.get("meta", {}),
        )


# ---------------------------------------------------------------------------
# Constraint residuals
# ---------------------------------------------------------------------------

def _node_constraints(arm: ArmModel, q, ds_rel, pitch_ref_l, pitch_ref_r):
    """Equality residuals at one node: relative translation (y, z) and the
    two frozen pad pitches."""
    pose_l, pose_r = arm.fk(q)
    return np.array([
        (pose_l.y - pose_r.y) - ds_rel,
        pose_l.z - pose_r.z,
        wrap_angle(pose_l.pitch - pitch_ref_l),
        wrap_angle(pose_r.pitch - pitch_ref_r),
    ])


def _node_constraint_jacobian(arm: ArmModel, q) -> np.ndarray:
    J = arm.jacobian(q)
    out = np.zeros((4, 6))
    out[0, :3] = J[0, :3]
    out[0, 3:] = -J[3, 3:]
    out[1, :3] = J[1, :3]
    out[1, 3:] = -J[4, 3:]
    out[2, :3] = 1.0
    out[3, 3:] = 1.0
    return out


def _clearance_hinge(arm: ArmModel, q, cfg: PlannerConfig) -> float:
    if not cfg.obstacles:
        return 0.0
    d = arm_clearance(arm, q, cfg.obstacles)
    return max(0.0, cfg.min_clearance - d)


def _clearance_hinge_jac(arm: ArmModel, q, cfg: PlannerConfig, h0: float) -> np.ndarray:
    """Finite-difference row for the clearance hinge (zero when inactive)."""
    row = np.zeros(6)
    if h0 == 0.0:
        return row
    eps = 1e-7
    for j in range(6):
        qp = np.array(q, dtype=float)
        qp[j] += eps
        row[j] = (_clearance_hinge(arm, qp, cfg) - h0) / eps
    return row


# ---------------------------------------------------------------------------
# Direct collocation
# ---------------------------------------------------------------------------

def _endpoint_report(arm, q, ds_rel, pitch_l, pitch_r, cfg, label):
    c = _node_constraints(arm, q, ds_rel, pitch_l, pitch_r)
    bad = {}
    if np.abs(c[:2]).max() > cfg.tolerance:
        bad[f"{label}_relative_translation_m"] = float(np.abs(c[:2]).max())
    if np.abs(c[2:]).max() > cfg.tolerance:
        bad[f"{label}_orientation_rad"] = float(np.abs(c[2:]).max())
    if not arm.within_limits(q):
        bad[f"{label}_joint_limits"] = True
    h = _clearance_hinge(arm, q, cfg)
    if h > 0:
        bad[f"{label}_clearance_m"] = float(cfg.min_clearance - h)
    return bad


def plan_trajectory(q_initial, q_goal, ds_rel: float, arm: ArmModel,
                    cfg: PlannerConfig) -> Trajectory:
    """Solve the collocation problem between two feasible configurations.

    Raises PlanningError with a violation report when the boundary
    configurations are infeasible or the penalty loop fails to drive the
    constraint residuals below ``cfg.tolerance``.
    """
    q_i = np.asarray(q_initial, dtype=float)
    q_g = np.asarray(q_goal, dtype=float)
    n = cfg.n_nodes
    pose_l0, pose_r0 = arm.fk(q_i)
    pitch_l, pitch_r = pose_l0.pitch, pose_r0.pitch

    report = {}
    report.update(_endpoint_report(arm, q_i, ds_rel, pitch_l, pitch_r, cfg, "initial"))
    report.update(_endpoint_report(arm, q_g, ds_rel, pitch_l, pitch_r, cfg, "goal"))
    if report:
        raise PlanningError(f"infeasible boundary conditions: {report}", report=report)

    if n == 2:
        nodes, controls = chain_nodes(np.vstack([q_i, q_g]))
        traj = Trajectory(nodes=nodes, controls=controls, ds_rel=ds_rel)
        certify_trajectory(traj, arm, cfg, raise_on_failure=True)
        return traj

    dof = arm.dof
    n_int = n - 2
    x = np.linspace(q_i, q_g, n)[1:-1].reshape(-1)  # interior nodes, warm start

    lo = np.tile(arm.q_min, n_int)
    hi = np.tile(arm.q_max, n_int)

    def assemble(xv, rho):
        Q = np.vstack([q_i, xv.reshape(n_int, dof), q_g])
        rows_r, rows_j = [], []
        sq_q, sq_u, sq_c = np.sqrt(cfg.q_weight), np.sqrt(cfg.u_weight), np.sqrt(rho)

        def col(k):  # variable column offset of node k, or None if fixed
            return None if k == 0 or k == n - 1 else (k - 1) * dof

        # goal attraction on interior nodes
        for k in range(1, n - 1):
            r = sq_q * (Q[k] - q_g)
            J = np.zeros((dof, n_int * dof))
            J[:, col(k): col(k) + dof] = sq_q * np.eye(dof)
            rows_r.append(r)
            rows_j.append(J)
        # control smoothness: second differences of q
        for k in range(n - 2):
            r = sq_u * (Q[k + 2] - 2 * Q[k + 1] + Q[k])
            J = np.zeros((dof, n_int * dof))
            for kk, w in ((k, 1.0), (k + 1, -2.0), (k + 2, 1.0)):
                c = col(kk)
                if c is not None:
                    J[:, c: c + dof] += sq_u * w * np.eye(dof)
            rows_r.append(r)
            rows_j.append(J)
        # penalized equality constraints + clearance hinge at interior nodes
        for k in range(1, n - 1):
            c = col(k)
            ck = _node_constraints(arm, Q[k], ds_rel, pitch_l, pitch_r)
            Jk = _node_constraint_jacobian(arm, Q[k])
            h = _clearance_hinge(arm, Q[k], cfg)
            Jh = _clearance_hinge_jac(arm, Q[k], cfg, h)
            r = sq_c * np.concatenate([ck, [h]])
            J = np.zeros((5, n_int * dof))
            J[:4, c: c + dof] = sq_c * Jk
            J[4, c: c + dof] = sq_c * Jh
            rows_r.append(r)
            rows_j.append(J)
        return np.concatenate(rows_r), np.vstack(rows_j)

    def max_violation(xv):
        Q = np.vstack([q_i, xv.reshape(n_int, dof), q_g])
        worst = 0.0
        for k in range(1, n - 1):
            ck = _node_constraints(arm, Q[k], ds_rel, pitch_l, pitch_r)
            worst = max(worst, float(np.abs(ck).max()), _clearance_hinge(arm, Q[k], cfg))
        return worst

    total_iters = 0
    for rho in (1e6, 1e8, 1e10, 1e12):
        for _ in range(60):
            if total_iters >= cfg.max_iterations:
                break
            total_iters += 1
            r, J = assemble(x, rho)
            cost = float(r @ r)
            step, *_ = np.linalg.lstsq(J, -r, rcond=None)
            accepted = False
            alpha = 1.0
            for _ in range(12):
                x_try = np.clip(x + alpha * step, lo, hi)
                r_try = assemble(x_try, rho)[0]
                if float(r_try @ r_try) < cost:
                    accepted = float(np.abs(x_try - x).max()) > 1e-14
                    x = x_try
                    break
                alpha *= 0.5
            if not accepted:
                break
        if max_violation(x) <= cfg.tolerance:
            break

    violation = max_violation(x)
    nodes, controls = chain_nodes(np.vstack([q_i, x.reshape(n_int, dof), q_g]))
    traj = Trajectory(nodes=nodes, controls=controls, ds_rel=ds_rel,
                      meta={"penalty_iterations": total_iters,
                            "max_constraint_violation": violation})
    if violation > cfg.tolerance:
        raise PlanningError(
            f"collocation failed to converge: max constraint residual {violation:.3e} "
            f"> tolerance {cfg.tolerance:.1e}",
            report={"max_violation": violation, "trajectory": traj.to_json()},
        )
    certify_trajectory(traj, arm, cfg, raise_on_failure=True)
    return traj


def certify_trajectory(traj: Trajectory, arm: ArmModel, cfg: PlannerConfig,
                       raise_on_failure: bool = False) -> dict:
    """Independent re-validation of a planned trajectory via plain FK.

    Checks transition exactness, joint limits, relative-translation and
    orientation residuals, and obstacle clearance at every node.
    """
    nodes = traj.nodes
    pose_l0, pose_r0 = arm.fk(nodes[0])
    rel_res, orient_res = 0.0, 0.0
    min_clear = np.inf
    limits_ok = True
    for q in nodes:
        pl, pr = arm.fk(q)
        rel = np.array([0.0, (pl.y - pr.y) - traj.ds_rel, pl.z - pr.z])
        rel_res = max(rel_res, float(np.abs(rel).max()))
        orient_res = max(
            orient_res,
            abs(wrap_angle(pl.pitch - pose_l0.pitch)),
            abs(wrap_angle(pr.pitch - pose_r0.pitch)),
        )
        limits_ok = limits_ok and arm.within_limits(q, margin=1e-12)
        if cfg.obstacles:
            min_clear = min(min_clear, arm_clearance(arm, q, cfg.obstacles))
    transition_exact = bool(np.all(traj.nodes[:-1] + traj.controls == traj.nodes[1:]))
    report = {
        "relative_translation_residual_m": rel_res,
        "orientation_residual_rad": orient_res,
        "joint_limits_ok": limits_ok,
        "min_clearance_m": None if not cfg.obstacles else float(min_clear),
        "transition_exact": transition_exact,
        "ok": (
            rel_res <= cfg.tolerance
            and orient_res <= cfg.tolerance
            and limits_ok
            and transition_exact
            and (not cfg.obstacles or min_clear >= cfg.min_clearance - cfg.tolerance)
        ),
    }
    if raise_on_failure and not report["ok"]:
        raise PlanningError(f"trajectory certification failed: {report}", report=report)
    return report


# ---------------------------------------------------------------------------
# Interpolation and force references
# ---------------------------------------------------------------------------

def interpolate_segment(q_k, q_k1, m: int) -> np.ndarray:
    """``m + 1`` evenly spaced configurations from q_k to q_k1 inclusive."""
    if m < 1:
        raise ValueError("interpolation count must be at least 1")
    return np.linspace(np.asarray(q_k, dtype=float), np.asarray(q_k1, dtype=float), m + 1)


def segment_force_reference(configs, box, mu: float, radius: float,
                            arm: ArmModel, box_pitches=None) -> float:
    """Upper-bound grip-force reference over one interpolated segment.

    Evaluates the per-pad gravity wrench at every configuration (using the
    box's a-priori CoM knowledge) and returns the largest centered
    control-line force requirement.  ``box_pitches`` optionally supplies a
    box orientation per configuration.
    """
    configs = np.atleast_2d(np.asarray(configs, dtype=float))
    worst = 0.0
    for i, q in enumerate(configs):
        pitch = 0.0 if box_pitches is None else float(box_pitches[i])
        for f_g, tau_g in box.pad_gravity_wrenches(pitch):
            worst = max(worst, contact.required_grip_force(f_g, abs(tau_g), mu, radius))
    return worst


# ---------------------------------------------------------------------------
# Tracking NLP
# ---------------------------------------------------------------------------

def tracking_step(q_nominal, ds_prev: float, dpitch_left: float, dpitch_right: float,
                  arm: ArmModel, cfg: PlannerConfig) -> np.ndarray:
    """Nearest configuration whose pads offset the nominal pose by the
    accumulated controller commands.

    The left pad translates +ds along the grip axis and the right pad -ds
    (positive = both advance toward the box); each pad pitch shifts by its
    accumulated alignment correction.  With all commands zero the nominal
    configuration is returned unchanged.
    """
    q_nom = np.asarray(q_nominal, dtype=float)
    if ds_prev == 0.0 and dpitch_left == 0.0 and dpitch_right == 0.0:
        return q_nom.copy()

    pose_l0, pose_r0 = arm.fk(q_nom)
    target = np.array([
        pose_l0.y + ds_prev, pose_l0.z, pose_l0.pitch + dpitch_left,
        pose_r0.y - ds_prev, pose_r0.z, pose_r0.pitch + dpitch_right,
    ])

    def constraints(q):
        pl, pr = arm.fk(q)
        return np.array([
            pl.y - target[0], pl.z - target[1], wrap_angle(pl.pitch - target[2]),
            pr.y - target[3], pr.z - target[4], wrap_angle(pr.pitch - target[5]),
        ])

    x = q_nom.copy()
    for rho in (1e8, 1e10, 1e12):
        sq = np.sqrt(rho)
        for _ in range(25):
            c = constraints(x)
            r = np.concatenate([x - q_nom, sq * c])
            J = np.vstack([np.eye(6), sq * arm.jacobian(x)])
            step, *_ = np.linalg.lstsq(J, -r, rcond=None)
            x_new = np.clip(x + step, arm.q_min, arm.q_max)
            if np.abs(x_new - x).max() < 1e-15:
                break
            x = x_new
            if np.abs(constraints(x)).max() <= cfg.tolerance and np.abs(step).max() < 1e-10:
                break
        if np.abs(constraints(x)).max() <= cfg.tolerance:
            break

    final = np.abs(constraints(x)).max()
    if final > cfg.tolerance:
        log.warning("tracking step saturated: residual %.3e rad/m above tolerance %.1e",
                    final, cfg.tolerance)
    return x


# ---------------------------------------------------------------------------
# Task-space tracking loop
# ---------------------------------------------------------------------------

def run_tracking(trajectory: Trajectory, simulator, gains: control.ControllerGains,
                 controller: str = "hybrid", regulation: str = "limit-curve",
                 safety_factor: float = 1.1):
    """Execute a planned trajectory against the simulator, tick by tick.

    Per segment: interpolate the nominal nodes, compute the upper-bound
    grip-force reference for the segment (limit-curve regulation), then
    per control node apply the integral force law and, for the hybrid
    controller, the alignment law; solve the tracking NLP and advance the
    simulator.  Returns the trajectory with its per-segment references
    filled in; tick records accumulate in the simulator's trace.
    """
    if controller not in ("hybrid", "force-only"):
        raise ValueError(f"unknown controller mode {controller!r}")
    if regulation not in ("limit-curve", "fixed"):
        raise ValueError(f"unknown regulation mode {regulation!r}")
    arm = simulator.arm
    cfg = simulator.planner_config
    mu = simulator.mu
    radius = simulator.pad_radius
    n_seg = trajectory.n_nodes - 1
    refs = np.zeros(n_seg)
    regulate = regulation == "limit-curve" and controller == "hybrid"

    ds_cum = 0.0
    dpitch = {"left": 0.0, "right": 0.0}

    for k in range(n_seg):
        configs = interpolate_segment(trajectory.nodes[k], trajectory.nodes[k + 1],
                                      cfg.n_interp)
        prog = (k + np.linspace(0.0, 1.0, cfg.n_interp + 1)) / n_seg
        if regulate:
            pitches = [simulator.box_pitch_at(p) for p in prog]
            base_ref = segment_force_reference(configs, simulator.box, mu, radius,
                                               arm, box_pitches=pitches)
            refs[k] = max(safety_factor * base_ref, gains.f_d1)
        else:
            refs[k] = gains.f_d2

        # skip the duplicated boundary configuration except on the first segment
        start = 0 if k == 0 else 1
        for s in range(start, cfg.n_interp + 1):
            q_nom = configs[s]
            meas = simulator.measure()
            ds_cum += control.tracking_force_advance(meas["force_mean"], refs[k], gains)
            if controller == "hybrid":
                for side in ("left", "right"):
                    cmd = control.alignment_step(meas[f"cop_{side}"], gains)
                    dpitch[side] += simulator.alignment_pitch_delta(side, cmd)
            q_adj = tracking_step(q_nom, ds_cum, dpitch["left"], dpitch["right"], arm, cfg)
            simulator.apply_configuration(
                q_adj,
                force_reference=refs[k],
                segment_index=k,
                progress=prog[s],
            )

    trajectory.force_refs = refs
    return trajectory
