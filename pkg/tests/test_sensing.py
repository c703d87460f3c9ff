import numpy as np
import pytest

from grippad import sensing
from grippad.errors import (
    DegenerateFitError,
    InvalidMeasurementError,
    ScenarioFormatError,
    UndefinedCopError,
)
from grippad.sensing import (
    CopCorrectionParams,
    PadGeometry,
    compute_cop,
    compute_normal_force,
    correct_cop,
    correction_cost,
    fit_affine,
    fit_cop_correction,
)


@pytest.fixture
def geometry():
    return PadGeometry.default(0.03)


# ---------------------------------------------------------------------------
# Geometry invariants
# ---------------------------------------------------------------------------

class TestPadGeometry:
    def test_default_layout_inside_disk(self, geometry):
        assert np.all(np.linalg.norm(geometry.sensor_positions, axis=1) <= 0.03 + 1e-12)
        assert np.all(np.linalg.norm(geometry.calibration_holes, axis=1) <= 0.03 + 1e-12)
        assert geometry.calibration_holes.shape == (19, 2)

    def test_rejects_duplicate_sensors(self):
        s = np.array([[0.01, 0.0], [0.01, 0.0], [0.0, 0.01]])
        with pytest.raises(ValueError, match="distinct"):
            PadGeometry(0.03, s, np.zeros((0, 2)))

    def test_rejects_collinear_sensors(self):
        s = np.array([[-0.01, 0.0], [0.0, 0.0], [0.01, 0.0]])
        with pytest.raises(ValueError, match="collinear"):
            PadGeometry(0.03, s, np.zeros((0, 2)))

    def test_rejects_sensor_outside_disk(self):
        s = np.array([[0.05, 0.0], [0.0, 0.02], [-0.02, -0.01]])
        with pytest.raises(ValueError, match="within the pad disk"):
            PadGeometry(0.03, s, np.zeros((0, 2)))


# ---------------------------------------------------------------------------
# Normal force
# ---------------------------------------------------------------------------

class TestNormalForce:
    def test_direct_sum(self):
        assert compute_normal_force([1.0, 2.0, 3.0]) == 6.0

    def test_zero_case(self):
        assert compute_normal_force([0.0, 0.0, 0.0]) == 0.0

    def test_task_scale(self):
        assert compute_normal_force([0.5, 0.5, 1.0]) == 2.0

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidMeasurementError):
            compute_normal_force([1.0, np.nan, 0.0])
        with pytest.raises(InvalidMeasurementError):
            compute_normal_force([np.inf, 0.0, 0.0])


# ---------------------------------------------------------------------------
# Center of pressure
# ---------------------------------------------------------------------------

def moment_residual(forces, point, geometry):
    """In-plane components of the total moment of plate-normal forces about
    ``point``; brute-force oracle for the CoP definition."""
    total = np.zeros(3)
    for f, s in zip(forces, geometry.sensor_positions):
        arm = np.array([s[0] - point[0], s[1] - point[1], 0.0])
        total += np.cross(arm, np.array([0.0, 0.0, f]))
    return total[:2]


class TestComputeCop:
    def test_equal_forces_give_centroid(self, geometry):
        cop = compute_cop([1.0, 1.0, 1.0], geometry)
        assert np.allclose(cop, geometry.sensor_positions.mean(axis=0), atol=1e-15)

    def test_single_active_sensor(self, geometry):
        cop = compute_cop([1.0, 0.0, 0.0], geometry)
        assert np.allclose(cop, geometry.sensor_positions[0], atol=1e-15)

    def test_moment_balance_oracle(self, geometry):
        forces = np.array([2.0, 1.0, 1.0])
        cop = compute_cop(forces, geometry)
        residual = moment_residual(forces, cop, geometry)
        scale = np.abs(forces).sum() * geometry.radius
        assert np.abs(residual).max() / scale < 1e-12

    def test_all_zero_forces_undefined(self, geometry):
        with pytest.raises(UndefinedCopError):
            compute_cop([0.0, 0.0, 0.0], geometry)

    def test_convexity_property(self, geometry):
        rng = np.random.default_rng(7)
        s = geometry.sensor_positions
        T = np.column_stack([s[1] - s[0], s[2] - s[0]])
        for _ in range(200):
            forces = rng.uniform(0.0, 5.0, size=3)
            if forces.sum() < 1e-9:
                continue
            cop = compute_cop(forces, geometry)
            lam = np.linalg.solve(T, cop - s[0])
            bary = np.array([1.0 - lam.sum(), lam[0], lam[1]])
            assert np.all(bary >= -1e-12) and np.all(bary <= 1.0 + 1e-12)

    def test_scale_invariance(self, geometry):
        rng = np.random.default_rng(11)
        for _ in range(50):
            forces = rng.uniform(0.1, 3.0, size=3)
            lam = rng.uniform(0.1, 100.0)
            a = compute_cop(forces, geometry)
            b = compute_cop(lam * forces, geometry)
            assert np.allclose(a, b, rtol=0, atol=1e-15)

    def test_moment_residual_property(self, geometry):
        rng = np.random.default_rng(13)
        for _ in range(100):
            forces = rng.uniform(0.0, 4.0, size=3) + 1e-6
            cop = compute_cop(forces, geometry)
            res = moment_residual(forces, cop, geometry)
            assert np.abs(res).max() <= 1e-12 * forces.sum() * geometry.radius


# ---------------------------------------------------------------------------
# Affine load-cell fit
# ---------------------------------------------------------------------------

class TestFitAffine:
    def test_exact_inversion(self):
        forces = np.linspace(0.0, 10.0, 8)
        volts = 100.0 * forces + 50.0
        cal = fit_affine(np.column_stack([volts, forces]))
        assert abs(cal.scale - 0.01) < 1e-10 * 0.01
        assert abs(cal.offset - (-0.5)) < 1e-10

    def test_two_point_form(self):
        s0, sg, g = 120.0, 890.0, 4.905
        cal = fit_affine([(s0, 0.0), (sg, g)])
        assert np.isclose(cal.scale, g / (sg - s0), rtol=1e-12)
        assert np.isclose(cal.offset, -s0 * g / (sg - s0), rtol=1e-12)

    def test_noisy_residual_matches_sigma(self):
        rng = np.random.default_rng(3)
        sigma = 0.05
        forces = np.linspace(0.0, 10.0, 400)
        volts = 250.0 * forces + 30.0
        noisy = forces + rng.normal(0.0, sigma, size=forces.size)
        cal = fit_affine(np.column_stack([volts, noisy]))
        fitted = cal.scale * volts + cal.offset
        rms = np.sqrt(np.mean((fitted - noisy) ** 2))
        assert 0.7 * sigma < rms < 1.3 * sigma

    def test_exactness_property_random(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            c, d = rng.uniform(0.001, 10.0), rng.uniform(-5.0, 5.0)
            volts = rng.uniform(-100.0, 100.0, size=10)
            if np.ptp(volts) < 1e-3:
                continue
            cal = fit_affine(np.column_stack([volts, c * volts + d]))
            assert np.isclose(cal.scale, c, rtol=1e-10)
            assert np.isclose(cal.offset, d, rtol=1e-10, atol=1e-10)

    def test_degenerate_voltages(self):
        with pytest.raises(DegenerateFitError):
            fit_affine([(5.0, 0.0), (5.0, 1.0), (5.0, 2.0)])


# ---------------------------------------------------------------------------
# CoP correction
# ---------------------------------------------------------------------------

class TestCorrectCop:
    def test_zero_params_identity(self, geometry):
        raw = np.array([0.004, -0.009])
        out = correct_cop(raw, CopCorrectionParams.zero(), geometry)
        assert np.array_equal(out, raw)

    def test_symmetric_cancellation_at_center(self, geometry):
        # identical coefficients for every sensor: the three unit vectors
        # from the center sum to zero
        row = np.array([0.2, 3.0, -10.0])
        params = CopCorrectionParams(np.tile(row, (3, 1)), np.tile(row, (3, 1)))
        out = correct_cop(np.zeros(2), params, geometry)
        assert np.abs(out).max() < 1e-15

    def test_sensor_coincident_raw_is_finite(self, geometry):
        params = CopCorrectionParams(np.ones((3, 3)), np.ones((3, 3)))
        out = correct_cop(geometry.sensor_positions[1], params, geometry)
        assert np.all(np.isfinite(out))


def _distorted_dataset(geometry, seed=0, noise=0.01):
    from grippad.sim import make_calibration_dataset

    rows = make_calibration_dataset(geometry, noise_sigma=noise,
                                    rng=np.random.default_rng(seed))
    return sensing.dataset_rows_to_pairs(rows, geometry)


class TestFitCopCorrection:
    def test_already_calibrated_data(self, geometry):
        pairs = [(h.copy(), h.copy()) for h in geometry.calibration_holes]
        params = fit_cop_correction(pairs, geometry)
        assert correction_cost(pairs, params, geometry) < 1e-18
        assert sensing.cop_mae(pairs, params, geometry) < 1e-9

    def test_declared_distortion_recovery(self, geometry):
        pairs = _distorted_dataset(geometry)
        params = fit_cop_correction(pairs, geometry)
        before = sensing.cop_mae(pairs, None, geometry)
        after = sensing.cop_mae(pairs, params, geometry)
        assert before / after >= 4.0
        assert after < 1.5e-3

    def test_constant_nearest_sensor_pull_recovery(self, geometry):
        from grippad.sim import NearestSensorPull, make_calibration_dataset

        rows = make_calibration_dataset(geometry, distortion=NearestSensorPull(0.2),
                                        noise_sigma=0.0)
        pairs = sensing.dataset_rows_to_pairs(rows, geometry)
        params = fit_cop_correction(pairs, geometry)
        before = sensing.cop_mae(pairs, None, geometry)
        after = sensing.cop_mae(pairs, params, geometry)
        assert before / after >= 4.0
        assert after < 1.5e-3

    def test_center_hole_only_warns_underdetermined(self, geometry):
        pairs = [(np.array([0.001, 0.0]), np.zeros(2))] * 3
        with pytest.warns(UserWarning, match="under-determined"):
            fit_cop_correction(pairs, geometry)

    def test_fit_is_local_minimum(self, geometry):
        pairs = _distorted_dataset(geometry, seed=2)
        params = fit_cop_correction(pairs, geometry)
        base = correction_cost(pairs, params, geometry)
        for idx in range(18):
            for sign in (+1.0, -1.0):
                theta = np.concatenate([params.a_coeffs.reshape(-1),
                                        params.b_coeffs.reshape(-1)])
                theta[idx] += sign * 1e-4
                perturbed = CopCorrectionParams(theta[:9].reshape(3, 3),
                                                theta[9:].reshape(3, 3))
                assert correction_cost(pairs, perturbed, geometry) >= base - 1e-15

    def test_fit_never_worse_than_zero_params(self, geometry):
        pairs = _distorted_dataset(geometry, seed=4)
        params = fit_cop_correction(pairs, geometry)
        assert (correction_cost(pairs, params, geometry)
                <= correction_cost(pairs, CopCorrectionParams.zero(), geometry))


# ---------------------------------------------------------------------------
# Dataset and calibration file round trips
# ---------------------------------------------------------------------------

class TestDatasetIO:
    def test_csv_round_trip(self, geometry, tmp_path):
        from grippad.sim import make_calibration_dataset

        rows = make_calibration_dataset(geometry, rng=np.random.default_rng(1))
        path = tmp_path / "cal.csv"
        sensing.write_dataset_csv(path, rows)
        loaded = sensing.load_calibration_csv(path)
        assert len(loaded) == len(rows) == 57
        for a, b in zip(rows, loaded):
            for col in sensing.DATASET_COLUMNS:
                assert a[col] == pytest.approx(b[col], abs=0, rel=0)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ScenarioFormatError):
            sensing.load_calibration_csv(path)

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("hole_x_m,hole_y_m,load_kg,f1_N,f2_N\n0,0,0.2,1,1\n")
        with pytest.raises(ScenarioFormatError, match="missing columns"):
            sensing.load_calibration_csv(path)

    def test_bad_value_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "hole_x_m,hole_y_m,load_kg,f1_N,f2_N,f3_N\n0,0,0.2,1,1,oops\n")
        with pytest.raises(ScenarioFormatError, match="line 2"):
            sensing.load_calibration_csv(path)

    def test_calibration_json_round_trip(self, geometry, tmp_path):
        pairs = _distorted_dataset(geometry, seed=6)
        params = fit_cop_correction(pairs, geometry)
        blob = sensing.calibration_to_json(params, geometry, 5e-3, 1e-3)
        path = tmp_path / "calibration.json"
        sensing.save_calibration(path, blob)
        import json
        loaded_params, loaded_geo = sensing.calibration_from_json(
            json.loads(path.read_text()))
        assert np.allclose(loaded_params.a_coeffs, params.a_coeffs)
        assert np.allclose(loaded_params.b_coeffs, params.b_coeffs)
        assert loaded_geo.radius == geometry.radius
