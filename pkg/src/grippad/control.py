"""Decoupled grip controllers: pad alignment, force integration, and
limit-curve force regulation.

The alignment loop rotates each pad about an in-plane axis perpendicular
to the measured CoP offset, pushing the CoP back toward the pad center.
The force loop advances both pads symmetrically by an amount proportional
to the (dead-zoned) force error.  The regulation law converts the box's
per-pad gravity load into a grip-force reference via the limit-curve
control line.

Sign convention: a positive pad advance moves each pad toward the box
center; commands inside a dead zone are exactly zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import contact


# Controllers tick at the sensing pipeline's output rate.
CONTROL_RATE_HZ = 85.0


@dataclass(frozen=True)
class ControllerGains:
    """Gains and thresholds for the alignment/force/regulation loops.

    ``f_d1`` is the low pre-contact force setpoint used until the measured
    force crosses ``contact_threshold``; ``f_d2`` is the task setpoint.
    """

    k_align: float = 0.5        # rad per meter of CoP offset
    k_force: float = 2e-4       # meters per Newton, grip loop
    k_track: float = 2e-4       # meters per Newton, trajectory-tracking loop
    cop_deadzone: float = 0.010     # m
    force_deadzone: float = 0.05    # N
    contact_threshold: float = 0.2  # N, setpoint switch
    f_d1: float = 0.3           # N, pre-contact setpoint
    f_d2: float = 2.0           # N, task setpoint

    def __post_init__(self):
        for name in ("k_align", "k_force", "k_track", "cop_deadzone",
                     "force_deadzone", "contact_threshold", "f_d1", "f_d2"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"gain {name} must be positive and finite, got {value}")
        if self.f_d1 >= self.f_d2:
            raise ValueError(f"pre-contact setpoint f_d1 = {self.f_d1} must be below f_d2 = {self.f_d2}")

    def replace(self, **kwargs) -> "ControllerGains":
        from dataclasses import replace
        return replace(self, **kwargs)


@dataclass(frozen=True)
class AlignmentCommand:
    """Counter-rotation for one pad: in-plane unit axis and angle (rad).

    A zero command carries a zero axis; otherwise the axis is the CoP
    offset rotated +90 deg, so the rotation tips the pad away from the
    over-pressed side.
    """

    axis: np.ndarray
    angle: float

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", a)
        if a.shape != (2,):
            raise ValueError("alignment axis must be a planar vector")
        n = np.linalg.norm(a)
        if self.angle != 0.0 and abs(n - 1.0) > 1e-9:
            raise ValueError("nonzero alignment command requires a unit axis")

    @classmethod
    def zero(cls) -> "AlignmentCommand":
        return cls(axis=np.zeros(2), angle=0.0)


@dataclass(frozen=True)
class ForceCommand:
    """Symmetric pad advance per control tick (meters; positive = toward
    the box center)."""

    advance: float

    def __post_init__(self):
        if not np.isfinite(self.advance):
            raise ValueError(f"non-finite force command: {self.advance}")


def dead_zone(error: float, threshold: float) -> float:
    """Shifted dead zone: exactly zero inside, continuous outside.

    g(e) = 0 for |e| <= t, else sign(e) * (|e| - t).
    """
    if abs(error) <= threshold:
        return 0.0
    return float(np.sign(error) * (abs(error) - threshold))


def alignment_step(cop, gains: ControllerGains) -> AlignmentCommand:
    """Integral alignment command from a measured CoP offset.

    The axis is the unit CoP vector rotated +90 deg ((x, y) -> (-y, x));
    the angle is k_align times the dead-zoned CoP distance.  Offsets inside
    the dead zone produce an exactly-zero command.
    """
    p = np.asarray(cop, dtype=float)
    dist = float(np.linalg.norm(p))
    mag = dead_zone(dist, gains.cop_deadzone)
    if mag == 0.0:
        return AlignmentCommand.zero()
    unit = p / dist
    axis = np.array([-unit[1], unit[0]])
    return AlignmentCommand(axis=axis, angle=gains.k_align * mag)


def skew_from_plane_axis(axis) -> np.ndarray:
    """Skew matrix of the 3-D embedding (n_x, n_y, 0) of an in-plane axis."""
    n = np.asarray(axis, dtype=float)
    return np.array([
        [0.0, 0.0, n[1]],
        [0.0, 0.0, -n[0]],
        [-n[1], n[0], 0.0],
    ])


def rodrigues(axis, angle: float) -> np.ndarray:
    """Rotation matrix about ``axis`` by ``angle`` (Rodrigues form).

    Accepts an in-plane (2,) axis, embedded with zero z, or a full (3,)
    axis.  Non-unit axes are normalized with a warning.
    """
    n = np.asarray(axis, dtype=float)
    if n.shape == (2,):
        n = np.array([n[0], n[1], 0.0])
    if n.shape != (3,):
        raise ValueError(f"rotation axis must be a 2- or 3-vector, got shape {n.shape}")
    if angle == 0.0:
        return np.eye(3)
    norm = np.linalg.norm(n)
    if norm == 0.0:
        raise ValueError("cannot rotate about a zero axis")
    if abs(norm - 1.0) > 1e-9:
        warnings.warn(f"normalizing non-unit rotation axis (norm {norm:.6g})", stacklevel=2)
        n = n / norm
    K = np.array([
        [0.0, -n[2], n[1]],
        [n[2], 0.0, -n[0]],
        [-n[1], n[0], 0.0],
    ])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def _reorthonormalize(R: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(R)
    out = u @ vt
    if np.linalg.det(out) < 0:
        u[:, -1] = -u[:, -1]
        out = u @ vt
    return out


def update_orientation(r_prev: np.ndarray, command: AlignmentCommand) -> np.ndarray:
    """Apply an alignment command in the pad body frame: R <- R * R(n, dθ).

    The result is re-orthonormalized so long command sequences do not
    drift away from SO(3).
    """
    if command.angle == 0.0:
        return np.array(r_prev, dtype=float)
    step = rodrigues(command.axis, command.angle)
    return _reorthonormalize(np.asarray(r_prev, dtype=float) @ step)


def variable_setpoint(f_n: float, gains: ControllerGains) -> float:
    """Anti-windup force setpoint: f_d1 until contact, f_d2 after.

    The boundary is inclusive: f_n equal to the contact threshold still
    selects the pre-contact setpoint.
    """
    if f_n < 0:
        raise ValueError(f"measured normal force must be nonnegative, got {f_n}")
    return gains.f_d1 if f_n <= gains.contact_threshold else gains.f_d2


def force_step(f_left: float, f_right: float, f_desired: float,
               gains: ControllerGains) -> ForceCommand:
    """Integral force command from the two pads' averaged force.

    Positive advance moves the pads toward each other, so the error enters
    as (setpoint - measured): a measured force below the setpoint tightens
    the grip.  Errors inside the force dead zone command exactly zero.
    """
    if not (np.isfinite(f_left) and np.isfinite(f_right) and np.isfinite(f_desired)):
        raise ValueError("non-finite force inputs")
    error = f_desired - 0.5 * (f_left + f_right)
    return ForceCommand(advance=gains.k_force * dead_zone(error, gains.force_deadzone))


def tracking_force_advance(f_measured: float, f_reference: float,
                           gains: ControllerGains) -> float:
    """Per-tick pad advance for the trajectory-tracking force loop.

    Same dead-zoned integral law as ``force_step`` but with the tracking
    gain; the dead zone is applied to the error before scaling.
    """
    return gains.k_track * dead_zone(f_reference - f_measured, gains.force_deadzone)


def regulate_grip(gravity_force: float, gravity_torque: float, cop,
                  mu: float = contact.DEFAULT_MU,
                  radius: float = contact.DEFAULT_RADIUS) -> float:
    """Grip-force reference covering a per-pad gravity wrench.

    Builds the control line for the measured CoP offset magnitude and
    returns the smallest normal force whose line covers
    (gravity_force, gravity_torque).
    """
    p = float(np.linalg.norm(np.asarray(cop, dtype=float)))
    return contact.required_grip_force_offset(gravity_force, gravity_torque, mu, radius, p)
