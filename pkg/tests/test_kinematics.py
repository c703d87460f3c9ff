import numpy as np
import pytest

from grippad.errors import PlanningError
from grippad.kinematics import (
    ArmModel,
    PadPose,
    arm_clearance,
    ik_dual,
    ik_side,
    rectangle_corners,
    segment_rectangle_clearance,
    wrap_angle,
)


@pytest.fixture
def arm():
    return ArmModel()


def manual_fk_left(arm, q3):
    """Independent forward kinematics for the left arm (plain trig)."""
    base = arm.base_left
    a1 = arm.base_angle_left + q3[0]
    a2 = a1 + q3[1]
    a3 = a2 + q3[2]
    L = arm.link_lengths
    y = base[0] + L[0] * np.cos(a1) + L[1] * np.cos(a2) + L[2] * np.cos(a3)
    z = base[1] + L[0] * np.sin(a1) + L[1] * np.sin(a2) + L[2] * np.sin(a3)
    return y, z, a3


class TestWrapAngle:
    def test_cases(self):
        assert wrap_angle(0.0) == 0.0
        assert wrap_angle(np.pi + 0.1) == pytest.approx(-np.pi + 0.1)
        assert wrap_angle(-np.pi - 0.1) == pytest.approx(np.pi - 0.1)
        assert wrap_angle(5 * np.pi) == pytest.approx(np.pi)


class TestForwardKinematics:
    def test_matches_manual_trig(self, arm):
        rng = np.random.default_rng(0)
        for _ in range(50):
            q3 = rng.uniform(-1.5, 1.5, size=3)
            pose = arm.fk_side(q3, "left")
            y, z, a3 = manual_fk_left(arm, q3)
            assert np.isclose(pose.y, y, atol=1e-14)
            assert np.isclose(pose.z, z, atol=1e-14)
            assert np.isclose(pose.pitch, wrap_angle(a3 - 0.0), atol=1e-14)

    def test_jacobian_matches_finite_differences(self, arm):
        rng = np.random.default_rng(1)
        eps = 1e-7
        for side in ("left", "right"):
            for _ in range(20):
                q3 = rng.uniform(-1.2, 1.2, size=3)
                J = arm.jacobian_side(q3, side)
                for j in range(3):
                    qp = q3.copy()
                    qp[j] += eps
                    p0 = arm.fk_side(q3, side)
                    p1 = arm.fk_side(qp, side)
                    fd = np.array([
                        (p1.y - p0.y) / eps,
                        (p1.z - p0.z) / eps,
                        wrap_angle(p1.pitch - p0.pitch) / eps,
                    ])
                    assert np.allclose(J[:, j], fd, atol=1e-6)

    def test_dual_jacobian_block_structure(self, arm):
        q = np.random.default_rng(2).uniform(-1.0, 1.0, size=6)
        J = arm.jacobian(q)
        assert np.all(J[:3, 3:] == 0.0)
        assert np.all(J[3:, :3] == 0.0)


class TestInverseKinematics:
    def test_round_trip_reachable_targets(self, arm):
        rng = np.random.default_rng(3)
        hits = 0
        while hits < 30:
            q3 = rng.uniform(-1.2, 1.2, size=3)
            target = arm.fk_side(q3, "left")
            sol = ik_side(arm, target, "left", seed=q3 + rng.normal(0, 0.05, 3))
            out = arm.fk_side(sol, "left")
            assert abs(out.y - target.y) < 1e-8
            assert abs(out.z - target.z) < 1e-8
            assert abs(wrap_angle(out.pitch - target.pitch)) < 1e-8
            hits += 1

    def test_unreachable_target_raises(self, arm):
        target = PadPose(y=arm.base_left[0] + 1.0, z=2.0, pitch=0.0)
        with pytest.raises(PlanningError):
            ik_side(arm, target, "left")

    def test_dual_ik(self, arm):
        left = PadPose(-0.049, 0.15, 0.0)
        right = PadPose(0.049, 0.15, 0.0)
        q = ik_dual(arm, left, right)
        pl, pr = arm.fk(q)
        assert abs(pl.y - left.y) < 1e-8 and abs(pr.y - right.y) < 1e-8
        assert abs(pl.z - left.z) < 1e-8 and abs(pr.z - right.z) < 1e-8


class TestClearance:
    def test_segment_far_from_rectangle(self):
        rect = rectangle_corners(0.0, 0.0, 0.05, 0.04)
        d = segment_rectangle_clearance((0.0, 0.1), (0.2, 0.1), rect)
        assert d == pytest.approx(0.06, abs=1e-12)

    def test_segment_crossing_rectangle_is_zero(self):
        rect = rectangle_corners(0.0, 0.0, 0.05, 0.04)
        assert segment_rectangle_clearance((-0.2, 0.0), (0.2, 0.0), rect) == 0.0

    def test_segment_inside_rectangle_is_zero(self):
        rect = rectangle_corners(0.0, 0.0, 0.05, 0.04)
        assert segment_rectangle_clearance((-0.01, 0.0), (0.01, 0.0), rect) == 0.0

    def test_arm_clearance_with_box(self, arm):
        rect = rectangle_corners(0.0, 0.15, 0.05, 0.04)
        q = ik_dual(arm, PadPose(-0.049, 0.15, 0.0), PadPose(0.049, 0.15, 0.0))
        d = arm_clearance(arm, q, [rect])
        assert d > 0.005  # proximal links stay clear of the gripped box

    def test_no_obstacles_infinite(self, arm):
        assert arm_clearance(arm, np.zeros(6), []) == np.inf


class TestArmModelValidation:
    def test_bad_link_lengths(self):
        with pytest.raises(ValueError):
            ArmModel(link_lengths=np.array([0.1, -0.1, 0.1]))

    def test_bad_limits(self):
        with pytest.raises(ValueError):
            ArmModel(q_min=np.full(6, 1.0), q_max=np.full(6, -1.0))
