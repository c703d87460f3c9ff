import numpy as np
import pytest

from grippad.contact import PressureField, check_slip, limit_curve, required_grip_force
from grippad.control import (
    AlignmentCommand,
    ControllerGains,
    alignment_step,
    dead_zone,
    force_step,
    regulate_grip,
    rodrigues,
    tracking_force_advance,
    update_orientation,
    variable_setpoint,
)


@pytest.fixture
def gains():
    return ControllerGains()


class TestGains:
    def test_defaults_valid(self, gains):
        assert gains.cop_deadzone == 0.010
        assert gains.f_d1 < gains.f_d2

    def test_setpoint_ordering_enforced(self):
        with pytest.raises(ValueError, match="f_d1"):
            ControllerGains(f_d1=2.5, f_d2=2.0)

    def test_positive_gains_enforced(self):
        with pytest.raises(ValueError):
            ControllerGains(k_align=0.0)
        with pytest.raises(ValueError):
            ControllerGains(k_force=-1e-4)


class TestDeadZone:
    def test_exact_zero_inside(self):
        assert dead_zone(0.009, 0.010) == 0.0
        assert dead_zone(-0.010, 0.010) == 0.0
        assert dead_zone(0.0, 0.010) == 0.0

    def test_shifted_outside(self):
        assert dead_zone(0.015, 0.010) == pytest.approx(0.005)
        assert dead_zone(-0.03, 0.010) == pytest.approx(-0.02)

    def test_continuity_at_threshold(self):
        eps = 1e-12
        assert abs(dead_zone(0.010 + eps, 0.010)) <= 2 * eps


class TestAlignmentStep:
    def test_inside_dead_zone_exactly_zero(self, gains):
        cmd = alignment_step(np.array([0.005, 0.0]), gains)
        assert cmd.angle == 0.0
        assert np.array_equal(cmd.axis, np.zeros(2))

    def test_outside_dead_zone(self, gains):
        cmd = alignment_step(np.array([0.020, 0.0]), gains)
        assert np.allclose(cmd.axis, [0.0, 1.0])
        assert cmd.angle == pytest.approx(gains.k_align * 0.010)

    def test_axis_perpendicular_to_cop(self, gains):
        rng = np.random.default_rng(0)
        for _ in range(100):
            cop = rng.uniform(-0.025, 0.025, size=2)
            cmd = alignment_step(cop, gains)
            if cmd.angle > 0:
                assert abs(np.dot(cmd.axis, cop)) < 1e-12
                assert np.isclose(np.linalg.norm(cmd.axis), 1.0)

    def test_axis_matches_quarter_turn_map(self, gains):
        # (x, y) -> (-y, x) applied to the unit CoP vector
        cop = np.array([0.012, -0.018])
        cmd = alignment_step(cop, gains)
        unit = cop / np.linalg.norm(cop)
        assert np.allclose(cmd.axis, [-unit[1], unit[0]], atol=1e-15)


class TestRodrigues:
    def test_zero_angle_identity(self):
        assert np.array_equal(rodrigues([0.0, 1.0], 0.0), np.eye(3))

    def test_quarter_turn_about_y(self):
        R = rodrigues(np.array([0.0, 1.0, 0.0]), np.pi / 2)
        assert np.allclose(R @ np.array([0.0, 0.0, 1.0]), [1.0, 0.0, 0.0], atol=1e-15)

    def test_group_composition(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            a, b = rng.uniform(-1.5, 1.5, size=2)
            lhs = rodrigues(axis, a) @ rodrigues(axis, b)
            rhs = rodrigues(axis, a + b)
            assert np.allclose(lhs, rhs, atol=1e-12)

    def test_fixes_axis(self):
        axis = np.array([0.6, 0.8, 0.0])
        R = rodrigues(axis, 0.7)
        assert np.allclose(R @ axis, axis, atol=1e-15)

    def test_non_unit_axis_normalized_with_warning(self):
        with pytest.warns(UserWarning, match="normalizing"):
            R = rodrigues(np.array([0.0, 2.0, 0.0]), np.pi / 2)
        assert np.allclose(R, rodrigues(np.array([0.0, 1.0, 0.0]), np.pi / 2))


class TestUpdateOrientation:
    def test_zero_command_unchanged(self):
        R0 = rodrigues(np.array([1.0, 0.0, 0.0]), 0.3)
        out = update_orientation(R0, AlignmentCommand.zero())
        assert np.array_equal(out, R0)

    def test_fixed_axis_angles_sum(self):
        axis = np.array([1.0, 0.0])
        R = np.eye(3)
        for _ in range(10):
            R = update_orientation(R, AlignmentCommand(axis=axis, angle=0.05))
        assert np.allclose(R, rodrigues(axis, 0.5), atol=1e-12)

    def test_orthonormality_drift_bounded(self):
        rng = np.random.default_rng(2)
        R = np.eye(3)
        for _ in range(10_000):
            v = rng.normal(size=2)
            v /= np.linalg.norm(v)
            R = update_orientation(R, AlignmentCommand(axis=v, angle=rng.uniform(0, 0.02)))
        assert np.linalg.norm(R.T @ R - np.eye(3)) < 1e-9


class TestVariableSetpoint:
    def test_pre_contact(self, gains):
        assert variable_setpoint(0.0, gains) == gains.f_d1

    def test_boundary_inclusive(self, gains):
        assert variable_setpoint(gains.contact_threshold, gains) == gains.f_d1

    def test_post_contact(self, gains):
        assert variable_setpoint(10 * gains.contact_threshold, gains) == gains.f_d2

    def test_negative_force_rejected(self, gains):
        with pytest.raises(ValueError):
            variable_setpoint(-0.1, gains)


class TestForceStep:
    def test_zero_error(self, gains):
        assert force_step(2.0, 2.0, 2.0, gains).advance == 0.0

    def test_inside_dead_zone_exactly_zero(self, gains):
        assert force_step(2.0, 2.0 + 2 * 0.04, 2.0, gains).advance == 0.0

    def test_averaging(self, gains):
        assert force_step(1.0, 3.0, 2.0, gains).advance == 0.0

    def test_below_setpoint_advances_toward_box(self, gains):
        cmd = force_step(0.5, 0.5, 2.0, gains)
        assert cmd.advance > 0.0
        assert cmd.advance == pytest.approx(gains.k_force * (1.5 - gains.force_deadzone))

    def test_above_setpoint_retreats(self, gains):
        assert force_step(3.0, 3.0, 2.0, gains).advance < 0.0

    def test_tracking_advance_same_convention(self, gains):
        assert tracking_force_advance(0.5, 2.0, gains) > 0.0
        assert tracking_force_advance(2.0, 2.0, gains) == 0.0


class TestRegulateGrip:
    def test_centered_cop_pure_coulomb(self):
        out = regulate_grip(1.0, 0.0, np.zeros(2), mu=0.5, radius=0.03)
        assert np.isclose(out, 2.0, rtol=1e-12)

    def test_centered_cop_matches_closed_form(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            f_g = rng.uniform(0.1, 2.0)
            tau_g = rng.uniform(0.0, 0.03)
            a = regulate_grip(f_g, tau_g, np.zeros(2), mu=0.5, radius=0.03)
            b = required_grip_force(f_g, tau_g, 0.5, 0.03)
            assert np.isclose(a, b, rtol=1e-12)

    def test_offset_cop_contains_gravity_wrench(self):
        cop = np.array([0.005, 0.005])
        f_g, tau_g = 1.0, 0.012
        f_n = regulate_grip(f_g, tau_g, cop, mu=0.5, radius=0.03)
        field = PressureField.from_cop_offset(f_n, 0.03, cop)
        curve = limit_curve(field, 0.5)
        assert check_slip((f_g, tau_g), curve) != "outside"

    def test_monotone_in_each_load_component(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            cop = rng.uniform(-0.005, 0.005, size=2)
            f_g = rng.uniform(0.1, 1.5)
            tau_g = rng.uniform(0.0, 0.02)
            base = regulate_grip(f_g, tau_g, cop)
            assert regulate_grip(f_g + 0.1, tau_g, cop) >= base - 1e-12
            assert regulate_grip(f_g, tau_g + 0.005, cop) >= base - 1e-12
