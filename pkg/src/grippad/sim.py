"""Deterministic kinematic simulation of two compliant pads gripping a box.

The world is the vertical plane spanned by the grip axis y (left pad on
the negative side) and height z.  Contact is quasi-static: each tick the
commanded pad poses are resolved against the box faces, the compliant
universal joint settles instantly, and the resulting pressure field,
synthetic load-cell readings, gravity wrench, and slip classification are
recorded.  The box follows the pad midpoint rigidly while the slip oracle
reports hold; on slip it is displaced by a fixed increment per tick so
failures are visible in traces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import contact, control, sensing
from .contact import ContactMode, ContactState, PressureField
from .errors import SimulationIntegrityError
from .kinematics import ArmModel, PadPose, rectangle_corners, wrap_angle
from .planner import PlannerConfig
from .scenarios import box_pitch_at as _profile_pitch
from .trace import SimTrace

log = logging.getLogger(__name__)

SLIP_TRANSLATE_STEP = 0.001            # m per slipping tick
SLIP_ROTATE_STEP = np.deg2rad(1.0)     # rad per slipping tick
MAX_INTERPENETRATION = 0.010           # m, simulation-integrity bound
LIFTOFF_EPS = 1e-3                     # m above start height counts as airborne


# ---------------------------------------------------------------------------
# Box
# ---------------------------------------------------------------------------

@dataclass
class BoxObject:
    """Rigid box: extents, mass, CoM offset (body frame), face tilt, friction.

    ``com_offset`` is (x, y, z) in the body frame; x is the out-of-plane
    axis whose lever arm drives the gravity torque about the pad normals.
    ``face_tilt`` tilts both gripped faces (wedge shape, narrower at top).
    """

    width: float
    height: float
    depth: float
    mass: float
    com_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    face_tilt: float = 0.0
    mu: float = 0.5

    def __post_init__(self):
        self.com_offset = np.asarray(self.com_offset, dtype=float)
        if self.mass <= 0:
            raise ValueError(f"box mass must be positive, got {self.mass}")
        half = np.array([self.width / 2, self.depth / 2, self.height / 2])
        if np.any(np.abs(self.com_offset) > half + 1e-12):
            raise ValueError("box CoM offset must lie inside the box")
        if not (0.0 <= self.face_tilt <= np.deg2rad(20.0) + 1e-12):
            raise ValueError("face tilt must be within [0, 20 deg]")

    @classmethod
    def from_scenario(cls, sc: dict) -> "BoxObject":
        b = sc["box"]
        return cls(
            width=b["width_m"], height=b["height_m"], depth=b["depth_m"],
            mass=b["mass_kg"], com_offset=np.array(b["com_offset_m"], dtype=float),
            face_tilt=np.deg2rad(b["face_tilt_deg"]), mu=b["mu"],
        )

    def com_lever_x(self, pitch: float) -> float:
        """Out-of-plane CoM lever arm after pitching about the grip axis."""
        return float(self.com_offset[0] * np.cos(pitch) + self.com_offset[2] * np.sin(pitch))

    def pad_gravity_wrenches(self, pitch: float):
        """Per-pad (tangential load, torque magnitude) for a held box."""
        weight = self.mass * sensing.GRAVITY
        f_g = 0.5 * weight * np.cos(self.face_tilt)
        tau = 0.5 * weight * abs(self.com_lever_x(pitch))
        return [(f_g, tau), (f_g, tau)]

    def flush_pitch(self, side: str) -> float:
        """Pad pitch (per-side convention) that seats flush on a face."""
        return -self.face_tilt if side == "left" else self.face_tilt


def gravity_wrench(box: BoxObject, box_pose, grip_points):
    """Per-pad gravity wrench [(f_g, tau_signed), ...] for a held box.

    ``box_pose`` is ((y, z) or (x, y, z) position, pitch about the grip
    axis); ``grip_points`` are the two contact centers as [x, y, z].  The
    tangential load splits evenly; the torque about each pad's normal
    comes from the out-of-plane lever between grip point and CoM.
    """
    position, pitch = box_pose
    position = np.asarray(position, dtype=float)
    weight = box.mass * sensing.GRAVITY
    f_g = 0.5 * weight * np.cos(box.face_tilt)
    com_x = box.com_lever_x(pitch)  # box-frame x offset in world x
    out = []
    for i, gp in enumerate(grip_points):
        gp = np.asarray(gp, dtype=float)
        lever = com_x - (gp[0] if gp.shape == (3,) else 0.0)
        tau = 0.5 * weight * lever
        # torque about each pad's own outward normal: signs mirror
        out.append((f_g, tau if i == 0 else -tau))
    return out


# ---------------------------------------------------------------------------
# Compliant pad and contact resolution
# ---------------------------------------------------------------------------

@dataclass
class CompliantPad:
    """A sensing pad on a two-axis compliant mount.

    The universal joint lets the plate seat flush on a face up to
    ``joint_limit`` of commanded misalignment; the wave-disk spring then
    holds a restoring torque proportional to the deflection, which skews
    the contact pressure and shifts the CoP.
    """

    geometry: sensing.PadGeometry
    side: str
    spring_stiffness: float = 0.05      # N*m/rad
    normal_stiffness: float = 2000.0    # N/m
    joint_limit: float = contact.JOINT_LIMIT_RAD
    pose: PadPose = None                # commanded pose, set each tick
    settled_pitch: float = 0.0

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"pad side must be left or right, got {self.side!r}")
        if self.pose is None:
            self.pose = PadPose(0.0, 0.0, 0.0)

    @property
    def cop_sign(self) -> float:
        # which pad edge over-presses for positive misalignment
        return -1.0 if self.side == "left" else 1.0


def contact_resolve(pad: CompliantPad, face_pitch: float, squeeze_depth: float):
    """Resolve one pad against a face plane.

    Returns (ContactState, PressureField | None, reaction_force_N).  Full
    contact keeps the plate flush and converts the spring deflection into
    a linear pressure gradient whose CoP offset is spring torque divided
    by normal force (clamped to the field-validity bound); misalignment
    beyond the joint limit leaves an edge contact with residual tilt.
    """
    if squeeze_depth <= 0.0:
        return ContactState(mode=ContactMode.SEPARATED), None, 0.0
    if squeeze_depth > MAX_INTERPENETRATION:
        raise SimulationIntegrityError(
            f"pad interpenetration {squeeze_depth * 1e3:.1f} mm exceeds "
            f"{MAX_INTERPENETRATION * 1e3:.0f} mm"
        )
    f_n = pad.normal_stiffness * squeeze_depth
    beta = wrap_angle(pad.pose.pitch - face_pitch)
    radius = pad.geometry.radius

    if abs(beta) <= pad.joint_limit:
        pad.settled_pitch = face_pitch
        offset_mag = min(pad.spring_stiffness * abs(beta) / max(f_n, 1e-12),
                         contact.COP_OFFSET_CLAMP_FRACTION * radius)
        offset = np.array([0.0, pad.cop_sign * np.sign(beta) * offset_mag])
        state = ContactState(mode=ContactMode.FULL, tilt=0.0, cop_offset=offset)
        fld = PressureField.from_cop_offset(f_n, radius, offset)
        return state, fld, f_n

    tilt = abs(beta) - pad.joint_limit
    pad.settled_pitch = face_pitch + np.sign(beta) * tilt
    edge = np.array([0.0, pad.cop_sign * np.sign(beta) * radius])
    state = ContactState(mode=ContactMode.EDGE, tilt=tilt, cop_offset=edge)
    return state, None, f_n


# ---------------------------------------------------------------------------
# Synthetic load-cell readings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolynomialDistortion:
    """Synthetic CoP distortion from the correction-model family.

    Applies a per-sensor distance polynomial forward (the inverse of what
    calibration later fits): each measured CoP drifts toward its nearby
    sensors, more strongly away from the pad center, mirroring the
    behavior of the physical pads.  Default coefficients produce a mean
    drift of about 5 mm on the stock 19-hole plate.
    """

    linear: float = 0.6
    quadratic: float = -9.0

    def params(self) -> sensing.CopCorrectionParams:
        row = np.array([0.0, self.linear, self.quadratic])
        return sensing.CopCorrectionParams(np.tile(row, (3, 1)), np.tile(row, (3, 1)))

    def apply(self, point: np.ndarray, geometry: sensing.PadGeometry) -> np.ndarray:
        return sensing.correct_cop(np.asarray(point, dtype=float), self.params(), geometry)


@dataclass(frozen=True)
class NearestSensorPull:
    """Constant-fraction drag of the CoP toward its nearest sensor."""

    fraction: float = 0.2

    def apply(self, point: np.ndarray, geometry: sensing.PadGeometry) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        d = np.linalg.norm(geometry.sensor_positions - p[None, :], axis=1)
        nearest = geometry.sensor_positions[int(np.argmin(d))]
        return p + self.fraction * (nearest - p)


def _barycentric_forces(cop: np.ndarray, f_n: float, geometry: sensing.PadGeometry):
    """Three cell forces summing to f_n with the given CoP; clamps the CoP
    into the sensor triangle when necessary (returns clamped flag)."""
    s = geometry.sensor_positions
    A = np.array([
        [1.0, 1.0, 1.0],
        [s[0, 0], s[1, 0], s[2, 0]],
        [s[0, 1], s[1, 1], s[2, 1]],
    ])
    rhs = np.array([f_n, f_n * cop[0], f_n * cop[1]])
    w = np.linalg.solve(A, rhs)
    if np.all(w >= -1e-12):
        return np.maximum(w, 0.0), False
    # clamp: pull toward the centroid until all weights are nonnegative
    centroid = s.mean(axis=0)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        candidate = centroid + mid * (cop - centroid)
        rhs = np.array([f_n, f_n * candidate[0], f_n * candidate[1]])
        w = np.linalg.solve(A, rhs)
        if np.all(w >= -1e-12):
            lo = mid
        else:
            hi = mid
    rhs = np.array([f_n, f_n * (centroid + lo * (cop - centroid))[0],
                    f_n * (centroid + lo * (cop - centroid))[1]])
    w = np.maximum(np.linalg.solve(A, rhs), 0.0)
    return w, True


def synth_readings(state: ContactState, f_n: float, geometry: sensing.PadGeometry,
                   distortion=None, noise_sigma: float = 0.0, rng=None):
    """Invert the CoP formula into three nonnegative load-cell forces.

    With no distortion and no noise, ``compute_cop`` on the result
    reproduces the contact CoP exactly and the force sum equals the
    reaction.  ``distortion`` (an object with ``apply``) and Gaussian
    noise emulate the uncalibrated sensor behavior for calibration
    studies.
    """
    if state.mode is ContactMode.SEPARATED:
        raise ValueError("cannot synthesize readings without contact")
    cop = np.asarray(state.cop_offset, dtype=float)
    if distortion is not None:
        cop = distortion.apply(cop, geometry)
    forces, clamped = _barycentric_forces(cop, f_n, geometry)
    if clamped:
        log.debug("synth CoP outside sensor triangle; clamped toward centroid")
    if noise_sigma > 0.0:
        if rng is None:
            raise ValueError("noise requires an explicit random generator")
        forces = np.maximum(forces + rng.normal(0.0, noise_sigma, size=3), 0.0)
    return forces


def make_calibration_dataset(geometry: sensing.PadGeometry,
                             loads_kg=(0.2, 0.5, 1.0),
                             distortion=None,
                             noise_sigma: float = 0.01,
                             rng=None):
    """Synthetic 19-hole x len(loads) calibration dataset rows.

    Each row holds the true hole position, the load mass, and three cell
    forces whose raw CoP lands at the distorted position.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if distortion is None:
        distortion = PolynomialDistortion()
    rows = []
    for hole in geometry.calibration_holes:
        for mass in loads_kg:
            f_n = mass * sensing.GRAVITY
            state = ContactState(mode=ContactMode.FULL, cop_offset=np.array(hole))
            forces = synth_readings(state, f_n, geometry, distortion=distortion,
                                    noise_sigma=noise_sigma, rng=rng)
            rows.append({
                "hole_x_m": hole[0], "hole_y_m": hole[1], "load_kg": mass,
                "f1_N": forces[0], "f2_N": forces[1], "f3_N": forces[2],
            })
    return rows


# ---------------------------------------------------------------------------
# Slip oracle
# ---------------------------------------------------------------------------

def slip_oracle(wrench, state: ContactState, fld: PressureField | None,
                mu: float, f_n: float, radius: float) -> str:
    """Classify an applied (f_t, tau) against the current contact's limit
    curve: ``hold``, ``slip-translate``, or ``slip-rotate``."""
    f_t, tau = float(wrench[0]), float(wrench[1])
    loaded = abs(f_t) > 1e-12 or abs(tau) > 1e-12
    if state.mode is ContactMode.SEPARATED:
        return "slip-translate" if loaded else "hold"
    if f_n <= 0.0:
        return "slip-translate" if loaded else "hold"
    if state.mode is ContactMode.EDGE:
        # point contact: no torque capacity at all
        if abs(tau) > 1e-12:
            return "slip-rotate"
        if abs(f_t) > contact.max_tangential_force(mu, f_n, state.tilt):
            return "slip-translate"
        return "hold"
    p_offset = float(np.linalg.norm(state.cop_offset)) if fld is None \
        else float(np.linalg.norm(fld.cop_offset))
    verdict = contact.classify_against_unit_curve(f_t, abs(tau), mu, f_n, radius, p_offset)
    if verdict == "inside":
        return "hold"
    f_ratio = abs(f_t) / (mu * f_n)
    t_ratio = abs(tau) / (2.0 * mu * f_n * radius / 3.0)
    return "slip-translate" if f_ratio >= t_ratio else "slip-rotate"


# ---------------------------------------------------------------------------
# Simulator
# ---------------------------------------------------------------------------

class GripSimulator:
    """Tick-stepped dual-pad gripping world driven by commanded pad poses.

    During the grip phase the pads are commanded directly in task space;
    during tracking the planner supplies joint configurations and the
    simulator runs them through the arms' forward kinematics.  One owner
    per instance; all randomness comes from the seeded generator.
    """

    def __init__(self, scenario: dict, arm: ArmModel | None = None):
        self.scenario = scenario
        self.seed = int(scenario["seed"])
        self.rng = np.random.default_rng(self.seed)
        self.mu = float(scenario["mu"])
        self.pad_radius = float(scenario["pad_radius_m"])
        self.noise_sigma = float(scenario["noise_sigma_n"])
        self.dt = 1.0 / float(scenario["control_rate_hz"])
        self.box = BoxObject.from_scenario(scenario)
        self.arm = arm if arm is not None else ArmModel()

        geometry = sensing.PadGeometry.default(self.pad_radius)
        pads_cfg = scenario["pads"]
        self.pads = {
            side: CompliantPad(
                geometry=geometry,
                side=side,
                spring_stiffness=pads_cfg["spring_stiffness_nm_per_rad"],
                normal_stiffness=pads_cfg["normal_stiffness_n_per_m"],
                joint_limit=np.deg2rad(pads_cfg["joint_limit_deg"]),
            )
            for side in ("left", "right")
        }

        g = scenario["gains"]
        self.gains = control.ControllerGains(
            k_align=g["k_align_rad_per_m"],
            k_force=g["k_force_m_per_n"],
            k_track=g["k_track_m_per_n"],
            cop_deadzone=g["cop_deadzone_m"],
            force_deadzone=g["force_deadzone_n"],
            contact_threshold=g["contact_threshold_n"],
            f_d1=g["f_d1_n"],
            f_d2=g["f_d2_n"],
        )

        p = scenario["planner"]
        ground = rectangle_corners(0.0, -0.25, 1.0, 0.25)
        box_rect = rectangle_corners(scenario["box"]["start_y_m"], scenario["box"]["start_z_m"],
                                     self.box.depth / 2, self.box.height / 2)
        self.planner_config = PlannerConfig(
            n_nodes=p["n_nodes"], n_interp=p["n_interp"],
            q_weight=p["q_weight"], u_weight=p["u_weight"],
            tolerance=p["tolerance"], min_clearance=p["min_clearance_m"],
            obstacles=[ground, box_rect],
        )

        # world state
        self.box_y = float(scenario["box"]["start_y_m"])
        self.box_z = float(scenario["box"]["start_z_m"])
        self.box_start_z = self.box_z
        self.start_grounded = bool(scenario["motion"].get("start_grounded", False))
        self.slip_offset = 0.0
        self.slip_angle = 0.0
        self.slip_events = 0
        self.tick_index = 0
        self.phase = "grip"
        self.trace = SimTrace()
        self.progress = 0.0

        # commanded pad poses: start just clear of the faces, misaligned
        gap = float(scenario["grip"]["initial_gap_m"])
        mis = np.deg2rad(pads_cfg["initial_pitch_misalign_deg"])
        z0 = self.box_z
        half = self.box.depth / 2
        self.pads["left"].pose = PadPose(
            y=self.box_y - half - gap, z=z0,
            pitch=self.box.flush_pitch("left") + mis)
        self.pads["right"].pose = PadPose(
            y=self.box_y + half + gap, z=z0,
            pitch=self.box.flush_pitch("right") - mis)

        self._last_measurement = None
        self._force_ref = self.gains.f_d1
        self._segment = -1
        self._gripped = False
        self._load_latched = False

    # ------------------------------------------------------------------
    # Geometry helpers
    # ------------------------------------------------------------------

    def box_pitch_at(self, progress: float) -> float:
        return _profile_pitch(self.scenario, progress)

    def current_box_pitch(self) -> float:
        return self.box_pitch_at(self.progress) + self.slip_angle

    def _face_y(self, side: str, z: float) -> float:
        """Face plane y-coordinate at height z (tilt pivots at box center)."""
        half = self.box.depth / 2
        lean = (z - self.box_z) * np.tan(self.box.face_tilt)
        if side == "left":
            return self.box_y - half + lean
        return self.box_y + half - lean

    def _squeeze(self, side: str) -> float:
        pad = self.pads[side]
        if side == "left":
            return pad.pose.y - self._face_y(side, pad.pose.z)
        return self._face_y(side, pad.pose.z) - pad.pose.y

    def alignment_pitch_delta(self, side: str, command: control.AlignmentCommand) -> float:
        """In-plane pitch change realizing an alignment command on one pad."""
        if command.angle == 0.0:
            return 0.0
        sign = -1.0 if side == "left" else 1.0
        return sign * command.axis[0] * command.angle

    @property
    def airborne(self) -> bool:
        """Whether the box's weight hangs on the pads.

        A grounded box loads the pads once lifted clear of its start
        height.  Otherwise the box is handed over only when the initial
        stable grip force is first reached (latched after that).
        """
        if self.start_grounded:
            return self.box_z > self.box_start_z + LIFTOFF_EPS
        return self._load_latched

    # ------------------------------------------------------------------
    # Tick engine
    # ------------------------------------------------------------------

    def measure(self) -> dict:
        if self._last_measurement is None:
            self.step()
        return self._last_measurement

    def step(self) -> dict:
        """Resolve contact for the commanded pad poses and record one tick."""
        # a gripped box is carried: it rides the pad midpoint, so contact is
        # resolved against the box's new pose in the same tick
        if self._gripped:
            self.box_y = 0.5 * (self.pads["left"].pose.y + self.pads["right"].pose.y)
            self.box_z = max(self.box_start_z,
                             0.5 * (self.pads["left"].pose.z + self.pads["right"].pose.z))
        held = True
        per_pad = {}
        for side in ("left", "right"):
            pad = self.pads[side]
            squeeze = self._squeeze(side)
            face_pitch = self.box.flush_pitch(side)
            state, fld, f_n = contact_resolve(pad, face_pitch, squeeze)
            if state.mode is ContactMode.SEPARATED:
                held = False
                forces = np.zeros(3)
                raw = np.zeros(2)
                corrected = np.zeros(2)
                measured_f = 0.0
            else:
                forces = synth_readings(state, f_n, pad.geometry,
                                        noise_sigma=self.noise_sigma, rng=self.rng)
                measured_f = sensing.compute_normal_force(forces)
                if measured_f > 0:
                    raw = sensing.compute_cop(forces, pad.geometry)
                else:
                    raw = np.array(state.cop_offset)
                corrected = raw  # in-sim sensors carry no systematic distortion
            per_pad[side] = {
                "state": state, "field": fld, "f_n": f_n,
                "forces": forces, "measured_f": measured_f,
                "raw_cop": raw, "cop": corrected,
            }

        mean_f = 0.5 * (per_pad["left"]["measured_f"] + per_pad["right"]["measured_f"])
        gripped = held and mean_f > self.gains.contact_threshold
        self._gripped = gripped
        if gripped and mean_f >= self.gains.f_d2 - self.gains.force_deadzone:
            self._load_latched = True

        pitch_now = self.current_box_pitch()
        airborne = self.airborne and gripped
        if airborne:
            wrenches = gravity_wrench(
                self.box, ((self.box_y, self.box_z), pitch_now),
                [np.array([0.0, self.pads["left"].pose.y, self.pads["left"].pose.z]),
                 np.array([0.0, self.pads["right"].pose.y, self.pads["right"].pose.z])],
            )
        else:
            wrenches = [(0.0, 0.0), (0.0, 0.0)]

        slip = "hold"
        for side, (f_g, tau_g) in zip(("left", "right"), wrenches):
            info = per_pad[side]
            verdict = slip_oracle((f_g, tau_g), info["state"], info["field"],
                                  self.mu, info["f_n"], self.pad_radius)
            info["slip"] = verdict
            if verdict != "hold" and slip == "hold":
                slip = verdict
        if airborne and slip != "hold":
            self.slip_events += 1
            if slip == "slip-translate":
                self.slip_offset -= SLIP_TRANSLATE_STEP
            else:
                lever = self.box.com_lever_x(pitch_now)
                self.slip_angle += np.sign(lever if lever != 0 else 1.0) * SLIP_ROTATE_STEP

        record = {
            "tick": self.tick_index,
            "time_s": self.tick_index * self.dt,
            "phase": self.phase,
            "segment": self._segment,
            "force_ref_n": self._force_ref,
            "force_l_n": per_pad["left"]["measured_f"],
            "force_r_n": per_pad["right"]["measured_f"],
            "force_mean_n": mean_f,
            "cop_l_raw_x_m": per_pad["left"]["raw_cop"][0],
            "cop_l_raw_y_m": per_pad["left"]["raw_cop"][1],
            "cop_l_x_m": per_pad["left"]["cop"][0],
            "cop_l_y_m": per_pad["left"]["cop"][1],
            "cop_l_dist_m": float(np.linalg.norm(per_pad["left"]["cop"])),
            "cop_r_raw_x_m": per_pad["right"]["raw_cop"][0],
            "cop_r_raw_y_m": per_pad["right"]["raw_cop"][1],
            "cop_r_x_m": per_pad["right"]["cop"][0],
            "cop_r_y_m": per_pad["right"]["cop"][1],
            "cop_r_dist_m": float(np.linalg.norm(per_pad["right"]["cop"])),
            "pad_l_y_m": self.pads["left"].pose.y,
            "pad_l_z_m": self.pads["left"].pose.z,
            "pad_l_pitch_rad": self.pads["left"].pose.pitch,
            "pad_r_y_m": self.pads["right"].pose.y,
            "pad_r_z_m": self.pads["right"].pose.z,
            "pad_r_pitch_rad": self.pads["right"].pose.pitch,
            "gravity_l_force_n": wrenches[0][0],
            "gravity_l_torque_nm": wrenches[0][1],
            "gravity_r_force_n": wrenches[1][0],
            "gravity_r_torque_nm": wrenches[1][1],
            "slip": slip if airborne else ("hold" if gripped else "none"),
            "slip_events": self.slip_events,
            "box_y_m": self.box_y,
            "box_z_m": self.box_z + self.slip_offset,
            "box_pitch_rad": pitch_now,
            "slip_offset_m": self.slip_offset,
            "slip_angle_rad": self.slip_angle,
        }
        self.trace.append(record)
        self.tick_index += 1
        self._last_measurement = {
            "force_mean": mean_f,
            "force_left": per_pad["left"]["measured_f"],
            "force_right": per_pad["right"]["measured_f"],
            "cop_left": per_pad["left"]["cop"],
            "cop_right": per_pad["right"]["cop"],
            "slip": slip,
        }
        return self._last_measurement

    # ------------------------------------------------------------------
    # Grip phase (direct task-space pad control)
    # ------------------------------------------------------------------

    def run_grip_phase(self, controller: str = "hybrid") -> bool:
        """Approach and squeeze until the task force setpoint settles.

        Returns True once the mean force stays inside the force dead zone
        of f_d2 for the configured settle window, False on tick budget
        exhaustion.
        """
        cfg = self.scenario["grip"]
        window = int(cfg["settle_window"])
        self.phase = "grip"
        self._force_ref = self.gains.f_d2
        streak = 0
        for _ in range(int(cfg["max_ticks"])):
            meas = self.measure()
            setpoint = control.variable_setpoint(meas["force_mean"], self.gains)
            cmd = control.force_step(meas["force_left"], meas["force_right"],
                                     setpoint, self.gains)
            self._advance_pads(cmd.advance)
            # the CoP of a barely loaded pad is sensor noise; align only on
            # an established contact
            if controller == "hybrid" and meas["force_mean"] > self.gains.contact_threshold:
                for side in ("left", "right"):
                    acmd = control.alignment_step(meas[f"cop_{side}"], self.gains)
                    delta = self.alignment_pitch_delta(side, acmd)
                    if delta != 0.0:
                        pad = self.pads[side]
                        pad.pose = PadPose(pad.pose.y, pad.pose.z, pad.pose.pitch + delta)
            self.step()
            err = abs(self._last_measurement["force_mean"] - self.gains.f_d2)
            streak = streak + 1 if err <= self.gains.force_deadzone else 0
            if streak >= window:
                return True
        return False

    def _advance_pads(self, advance: float) -> None:
        left, right = self.pads["left"], self.pads["right"]
        left.pose = PadPose(left.pose.y + advance, left.pose.z, left.pose.pitch)
        right.pose = PadPose(right.pose.y - advance, right.pose.z, right.pose.pitch)

    # ------------------------------------------------------------------
    # Tracking phase (joint-space, driven by planner.run_tracking)
    # ------------------------------------------------------------------

    def apply_configuration(self, q, force_reference: float,
                            segment_index: int, progress: float) -> dict:
        """Command pad poses from a joint configuration and step once."""
        self.phase = "track"
        self._force_ref = float(force_reference)
        self._segment = int(segment_index)
        self.progress = float(progress)
        pose_l, pose_r = self.arm.fk(q)
        self.pads["left"].pose = pose_l
        self.pads["right"].pose = pose_r
        return self.step()

    def commanded_poses(self) -> tuple[PadPose, PadPose]:
        return self.pads["left"].pose, self.pads["right"].pose
