"""Planar dual-arm kinematics for the desk-scale gripping tasks.

Both 3-revolute arms live in a shared vertical plane spanned by the grip
axis (world y, left arm on the negative side) and the vertical (world z).
Out-of-plane x is identically zero; planner-facing positions are exposed
as [x, y, z] vectors with x = 0.  A pad's "pitch" is its in-plane
rotation away from squarely facing the box (0 = pad plane vertical).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PlanningError


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return float(np.arctan2(np.sin(a), np.cos(a)))


@dataclass(frozen=True)
class PadPose:
    """In-plane pad pose: grip-axis position, height, and pitch (rad)."""

    y: float
    z: float
    pitch: float

    def translation3(self) -> np.ndarray:
        return np.array([0.0, self.y, self.z])


@dataclass(frozen=True)
class ArmModel:
    """Two mirrored planar arms with three revolute joints each.

    ``q`` vectors stack left then right: (qL1, qL2, qL3, qR1, qR2, qR3).
    ``facing_left``/``facing_right`` are the nominal tip directions that
    define zero pad pitch (+y for the left arm, -y for the right).
    """

    link_lengths: np.ndarray = field(default_factory=lambda: np.array([0.16, 0.14, 0.10]))
    q_min: np.ndarray = field(default_factory=lambda: np.full(6, -2.8))
    q_max: np.ndarray = field(default_factory=lambda: np.full(6, 2.8))
    base_left: np.ndarray = field(default_factory=lambda: np.array([-0.35, 0.18]))
    base_right: np.ndarray = field(default_factory=lambda: np.array([0.35, 0.18]))
    base_angle_left: float = 0.0
    base_angle_right: float = np.pi

    def __post_init__(self):
        for name in ("link_lengths", "q_min", "q_max", "base_left", "base_right"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.link_lengths <= 0):
            raise ValueError("link lengths must be positive")
        if self.q_min.shape != (6,) or self.q_max.shape != (6,):
            raise ValueError("joint limits must cover both arms (6 values)")
        if np.any(self.q_min >= self.q_max):
            raise ValueError("q_min must be elementwise below q_max")

    @property
    def dof(self) -> int:
        return 6

    def _side(self, side: str):
        if side == "left":
            return self.base_left, self.base_angle_left, 0.0
        if side == "right":
            return self.base_right, self.base_angle_right, np.pi
        raise ValueError(f"unknown arm side {side!r}")

    def joint_points(self, q3, side: str) -> np.ndarray:
        """Positions (4, 2) of base, two joints, and tip in the (y, z) plane."""
        base, base_angle, _ = self._side(side)
        q3 = np.asarray(q3, dtype=float)
        angles = base_angle + np.cumsum(q3)
        pts = [np.asarray(base, dtype=float)]
        for L, a in zip(self.link_lengths, angles):
            pts.append(pts[-1] + L * np.array([np.cos(a), np.sin(a)]))
        return np.array(pts)

    def fk_side(self, q3, side: str) -> PadPose:
        base, base_angle, facing = self._side(side)
        q3 = np.asarray(q3, dtype=float)
        pts = self.joint_points(q3, side)
        tip_angle = base_angle + float(np.sum(q3))
        return PadPose(y=float(pts[-1, 0]), z=float(pts[-1, 1]),
                       pitch=wrap_angle(tip_angle - facing))

    def fk(self, q) -> tuple[PadPose, PadPose]:
        q = np.asarray(q, dtype=float)
        return self.fk_side(q[:3], "left"), self.fk_side(q[3:], "right")

    def jacobian_side(self, q3, side: str) -> np.ndarray:
        """Analytic 3x3 Jacobian of (y, z, pitch) w.r.t. the arm's joints."""
        pts = self.joint_points(q3, side)
        tip = pts[-1]
        J = np.zeros((3, 3))
        for j in range(3):
            r = tip - pts[j]
            J[0, j] = -r[1]
            J[1, j] = r[0]
            J[2, j] = 1.0
        return J

    def jacobian(self, q) -> np.ndarray:
        """Block-diagonal 6x6 Jacobian of both pad poses w.r.t. q."""
        q = np.asarray(q, dtype=float)
        J = np.zeros((6, 6))
        J[:3, :3] = self.jacobian_side(q[:3], "left")
        J[3:, 3:] = self.jacobian_side(q[3:], "right")
        return J

    def clamp(self, q) -> np.ndarray:
        return np.clip(np.asarray(q, dtype=float), self.q_min, self.q_max)

    def within_limits(self, q, margin: float = 0.0) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.q_min - margin) and np.all(q <= self.q_max + margin))


# Elbow-up nominal postures used to seed inverse kinematics.
SEED_LEFT = np.array([0.7, -1.1, 0.4])
SEED_RIGHT = np.array([-0.7, 1.1, -0.4])


def ik_side(arm: ArmModel, target: PadPose, side: str, seed=None,
            tol: float = 1e-10, max_iter: int = 100) -> np.ndarray:
    """Damped Gauss-Newton inverse kinematics for one arm.

    Solves position and pitch exactly (3 constraints, 3 joints); raises
    PlanningError when the target is out of reach or limits clip the
    solution.
    """
    if seed is None:
        seed = SEED_LEFT if side == "left" else SEED_RIGHT
    q = np.array(seed, dtype=float)

    def residual(qv):
        pose = arm.fk_side(qv, side)
        return np.array([pose.y - target.y, pose.z - target.z,
                         wrap_angle(pose.pitch - target.pitch)])

    lam = 1e-6
    r = residual(q)
    for _ in range(max_iter):
        if float(np.abs(r).max()) < tol:
            break
        J = arm.jacobian_side(q, side)
        step = np.linalg.solve(J.T @ J + lam * np.eye(3), -J.T @ r)
        q_new = q + step
        r_new = residual(q_new)
        if float(r_new @ r_new) < float(r @ r):
            q, r = q_new, r_new
            lam = max(lam * 0.5, 1e-12)
        else:
            lam *= 10.0
            if lam > 1e8:
                break
    if float(np.abs(r).max()) > 1e-8:
        raise PlanningError(
            f"IK failed for {side} pad target ({target.y:.3f}, {target.z:.3f}, {target.pitch:.3f}); "
            f"residual {np.abs(r).max():.3e}",
            report={"residual": r.tolist()},
        )
    sl = slice(0, 3) if side == "left" else slice(3, 6)
    q_clamped = np.clip(q, arm.q_min[sl], arm.q_max[sl])
    if np.abs(q_clamped - q).max() > 1e-12:
        raise PlanningError(f"IK solution violates joint limits for {side} arm",
                            report={"q": q.tolist()})
    return q


def ik_dual(arm: ArmModel, target_left: PadPose, target_right: PadPose,
            seed=None) -> np.ndarray:
    qL = ik_side(arm, target_left, "left", None if seed is None else seed[:3])
    qR = ik_side(arm, target_right, "right", None if seed is None else seed[3:])
    return np.concatenate([qL, qR])


# ---------------------------------------------------------------------------
# Clearance geometry (planar)
# ---------------------------------------------------------------------------

def _seg_seg_distance(p1, p2, q1, q2) -> float:
    """Minimum distance between two planar segments."""
    p1, p2, q1, q2 = (np.asarray(v, dtype=float) for v in (p1, p2, q1, q2))

    def cross(u, v):
        return u[0] * v[1] - u[1] * v[0]

    d1, d2 = p2 - p1, q2 - q1
    # proper intersection -> distance zero
    denom = cross(d1, d2)
    if abs(denom) > 1e-15:
        t = cross(q1 - p1, d2) / denom
        s = cross(q1 - p1, d1) / denom
        if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= s <= 1 + 1e-12:
            return 0.0

    def point_seg(pt, a, b):
        ab = b - a
        L2 = float(ab @ ab)
        t = 0.0 if L2 == 0 else float(np.clip((pt - a) @ ab / L2, 0.0, 1.0))
        return float(np.linalg.norm(pt - (a + t * ab)))

    return min(point_seg(p1, q1, q2), point_seg(p2, q1, q2),
               point_seg(q1, p1, p2), point_seg(q2, p1, p2))


def rectangle_corners(center_y: float, center_z: float, half_y: float,
                      half_z: float, pitch: float = 0.0) -> np.ndarray:
    """Corners (4, 2) of an in-plane rectangle, counterclockwise."""
    c, s = np.cos(pitch), np.sin(pitch)
    R = np.array([[c, -s], [s, c]])
    local = np.array([[-half_y, -half_z], [half_y, -half_z],
                      [half_y, half_z], [-half_y, half_z]])
    return local @ R.T + np.array([center_y, center_z])


def _point_in_convex(pt, corners) -> bool:
    n = len(corners)
    for i in range(n):
        e = corners[(i + 1) % n] - corners[i]
        if e[0] * (pt[1] - corners[i][1]) - e[1] * (pt[0] - corners[i][0]) < 0:
            return False
    return True


def segment_rectangle_clearance(p1, p2, corners) -> float:
    """Distance from a segment to a rectangle; zero if touching or inside."""
    if _point_in_convex(np.asarray(p1, dtype=float), corners) or \
       _point_in_convex(np.asarray(p2, dtype=float), corners):
        return 0.0
    n = len(corners)
    return min(
        _seg_seg_distance(p1, p2, corners[i], corners[(i + 1) % n])
        for i in range(n)
    )


def arm_clearance(arm: ArmModel, q, obstacles) -> float:
    """Smallest clearance between the proximal arm links and any obstacle.

    The pad-bearing distal link is exempt (it is supposed to touch the
    box); only the first two links of each arm are checked.  ``obstacles``
    is an iterable of corner arrays from ``rectangle_corners``.
    """
    obstacles = list(obstacles)
    if not obstacles:
        return np.inf
    q = np.asarray(q, dtype=float)
    best = np.inf
    for side, qs in (("left", q[:3]), ("right", q[3:])):
        pts = arm.joint_points(qs, side)
        for a, b in ((pts[0], pts[1]), (pts[1], pts[2])):
            for rect in obstacles:
                best = min(best, segment_rectangle_clearance(a, b, rect))
    return float(best)
