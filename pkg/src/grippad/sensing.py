"""Pad force sensing: normal force, center of pressure, and calibration.

A gripping pad carries three 1-D load cells under a rigid circular plate.
The cells report forces normal to the plate; their sum is the gripping
normal force and their force-weighted centroid is the measured center of
pressure (CoP).  Two calibration stages are supported:

* per-cell affine voltage-to-force calibration, and
* a polynomial CoP correction that undoes the systematic drift of measured
  CoPs toward their nearest sensor.

All functions are pure; nothing here keeps state between calls.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateFitError,
    InvalidMeasurementError,
    ScenarioFormatError,
    UndefinedCopError,
)

log = logging.getLogger(__name__)

GRAVITY = 9.81  # m/s^2, used to convert calibration masses to forces

DATASET_COLUMNS = ("hole_x_m", "hole_y_m", "load_kg", "f1_N", "f2_N", "f3_N")


# ---------------------------------------------------------------------------
# Geometry and parameter containers
# ---------------------------------------------------------------------------

def default_sensor_positions(radius: float) -> np.ndarray:
    """Three sensors on a circle of 0.8*radius, 120 deg apart, one at top."""
    angles = np.deg2rad([90.0, 210.0, 330.0])
    return 0.8 * radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def default_calibration_holes(radius: float) -> np.ndarray:
    """19-hole circular pattern: center, 6 holes at 0.13R, 12 at 0.26R.

    The pattern spans the pad's operational CoP envelope (offsets up to
    R/4) and stays well inside the triangle spanned by the sensors: a
    plate on three cells tips when loaded outside its support, whose
    inradius is 0.4R for the default 0.8R sensor circle.  Ring phases are
    offset from the sensor angles.
    """
    holes = [np.zeros(2)]
    inner = np.deg2rad(30.0 + 60.0 * np.arange(6))
    for a in inner:
        holes.append(0.13 * radius * np.array([np.cos(a), np.sin(a)]))
    outer = np.deg2rad(15.0 + 30.0 * np.arange(12))
    for a in outer:
        holes.append(0.26 * radius * np.array([np.cos(a), np.sin(a)]))
    return np.array(holes)


@dataclass(frozen=True)
class PadGeometry:
    """Sensor layout and plate radius; the frame for all CoP arithmetic.

    Coordinates are meters in the pad body frame with origin at the plate
    center.  Sensor positions must be distinct, non-collinear, and inside
    the plate disk; so must the calibration holes.
    """

    radius: float
    sensor_positions: np.ndarray
    calibration_holes: np.ndarray

    def __post_init__(self):
        sensors = np.asarray(self.sensor_positions, dtype=float)
        holes = np.asarray(self.calibration_holes, dtype=float)
        object.__setattr__(self, "sensor_positions", sensors)
        object.__setattr__(self, "calibration_holes", holes)
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"pad radius must be positive, got {self.radius}")
        if sensors.shape != (3, 2):
            raise ValueError(f"expected 3 planar sensors, got shape {sensors.shape}")
        d01 = np.linalg.norm(sensors[0] - sensors[1])
        d02 = np.linalg.norm(sensors[0] - sensors[2])
        d12 = np.linalg.norm(sensors[1] - sensors[2])
        if min(d01, d02, d12) < 1e-9:
            raise ValueError("sensor positions must be distinct")
        area2 = abs(_cross2(sensors[1] - sensors[0], sensors[2] - sensors[0]))
        if area2 < 1e-12:
            raise ValueError("sensor positions must be non-collinear")
        tol = 1e-9 + self.radius
        if np.any(np.linalg.norm(sensors, axis=1) > tol):
            raise ValueError("sensor positions must lie within the pad disk")
        if holes.size and np.any(np.linalg.norm(holes, axis=1) > tol):
            raise ValueError("calibration holes must lie within the pad disk")

    @classmethod
    def default(cls, radius: float = 0.03) -> "PadGeometry":
        return cls(
            radius=radius,
            sensor_positions=default_sensor_positions(radius),
            calibration_holes=default_calibration_holes(radius),
        )


@dataclass(frozen=True)
class LoadCellCalibration:
    """Affine voltage-to-force map: force = scale * voltage + offset."""

    scale: float
    offset: float

    def __post_init__(self):
        if not np.isfinite(self.scale) or self.scale == 0.0:
            raise ValueError(f"load-cell scale must be finite and nonzero, got {self.scale}")
        if not np.isfinite(self.offset):
            raise ValueError(f"load-cell offset must be finite, got {self.offset}")

    def force(self, voltage: float) -> float:
        return self.scale * voltage + self.offset


@dataclass(frozen=True)
class CopCorrectionParams:
    """Per-sensor cubic polynomial weights for the CoP correction.

    ``a_coeffs[i, j]`` weighs the x-component of the unit vector toward
    sensor i by distance^j (j = 0..2); ``b_coeffs`` does the same for y.
    """

    a_coeffs: np.ndarray
    b_coeffs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_coeffs, dtype=float)
        b = np.asarray(self.b_coeffs, dtype=float)
        object.__setattr__(self, "a_coeffs", a)
        object.__setattr__(self, "b_coeffs", b)
        if a.shape != (3, 3) or b.shape != (3, 3):
            raise ValueError("correction coefficient matrices must be 3x3")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("correction coefficients must be finite")

    @classmethod
    def zero(cls) -> "CopCorrectionParams":
        return cls(np.zeros((3, 3)), np.zeros((3, 3)))


@dataclass(frozen=True)
class PadMeasurement:
    """One processed pad sample: per-cell forces, total force, raw and
    corrected CoP."""

    forces: np.ndarray
    total_force: float
    raw_cop: np.ndarray
    corrected_cop: np.ndarray


def _cross2(u, v) -> float:
    return u[0] * v[1] - u[1] * v[0]


# ---------------------------------------------------------------------------
# Measurement operations
# ---------------------------------------------------------------------------

def compute_normal_force(forces) -> float:
    """Total normal force: the sum of the three load-cell forces."""
    f = np.asarray(forces, dtype=float)
    if f.shape != (3,):
        raise InvalidMeasurementError(f"expected 3 forces, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise InvalidMeasurementError(f"non-finite load-cell forces: {f}")
    return float(np.sum(f))


def compute_cop(forces, geometry: PadGeometry) -> np.ndarray:
    """Center of pressure: magnitude-weighted centroid of the sensor points.

    The returned point zeroes the in-plane components of the total moment
    of the (plate-normal) cell forces.  Undefined when all forces vanish.
    """
    f = np.asarray(forces, dtype=float)
    if f.shape != (3,):
        raise InvalidMeasurementError(f"expected 3 forces, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise InvalidMeasurementError(f"non-finite load-cell forces: {f}")
    w = np.abs(f)
    total = w.sum()
    if total <= 0.0:
        raise UndefinedCopError("CoP undefined for all-zero load-cell forces")
    return (w[:, None] * geometry.sensor_positions).sum(axis=0) / total


def measurement_from_forces(
    forces,
    geometry: PadGeometry,
    correction: CopCorrectionParams | None = None,
) -> PadMeasurement:
    """Bundle raw readings into a PadMeasurement, applying CoP correction."""
    f = np.asarray(forces, dtype=float)
    total = compute_normal_force(f)
    raw = compute_cop(f, geometry)
    corrected = raw if correction is None else correct_cop(raw, correction, geometry)
    return PadMeasurement(forces=f, total_force=total, raw_cop=raw, corrected_cop=corrected)


# ---------------------------------------------------------------------------
# Load-cell affine fit
# ---------------------------------------------------------------------------

def fit_affine(samples) -> LoadCellCalibration:
    """Least-squares affine fit force = c*voltage + d.

    ``samples`` is a sequence of (voltage, known_force) pairs, at least two
    of which must have distinct voltages.  Exact on noiseless affine data.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise DegenerateFitError("need at least two (voltage, force) samples")
    volts, forces = data[:, 0], data[:, 1]
    if not np.all(np.isfinite(data)):
        raise InvalidMeasurementError("non-finite calibration samples")
    if np.ptp(volts) < 1e-12 * max(1.0, np.max(np.abs(volts))):
        raise DegenerateFitError("all calibration voltages are equal; slope is undetermined")
    A = np.stack([volts, np.ones_like(volts)], axis=1)
    (c, d), *_ = np.linalg.lstsq(A, forces, rcond=None)
    return LoadCellCalibration(scale=float(c), offset=float(d))


# ---------------------------------------------------------------------------
# CoP correction model
# ---------------------------------------------------------------------------

def _correction_features(raw: np.ndarray, geometry: PadGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Feature rows (9,) for the x and y correction terms at one raw CoP.

    Feature (i, j) is distance_i^j times the unit-vector component toward
    sensor i.  A raw point coincident with a sensor contributes zero for
    that sensor (removable singularity of the unit vector).
    """
    diffs = geometry.sensor_positions - raw[None, :]
    dists = np.linalg.norm(diffs, axis=1)
    ok = dists > 1e-12
    units = np.zeros_like(diffs)
    units[ok] = diffs[ok] / dists[ok, None]
    powers = dists[:, None] ** np.arange(3)[None, :]  # d^0, d^1, d^2
    fx = (powers * units[:, 0:1]).reshape(-1)
    fy = (powers * units[:, 1:2]).reshape(-1)
    return fx, fy


def correct_cop(raw, params: CopCorrectionParams, geometry: PadGeometry) -> np.ndarray:
    """Apply the polynomial correction to a raw CoP measurement."""
    p = np.asarray(raw, dtype=float)
    if p.shape != (2,):
        raise InvalidMeasurementError(f"expected planar CoP, got shape {p.shape}")
    fx, fy = _correction_features(p, geometry)
    dx = float(fx @ params.a_coeffs.reshape(-1))
    dy = float(fy @ params.b_coeffs.reshape(-1))
    return p + np.array([dx, dy])


def correction_cost(dataset, params: CopCorrectionParams, geometry: PadGeometry) -> float:
    """Sum of squared distances between corrected CoPs and ground truth."""
    total = 0.0
    for raw, truth in dataset:
        err = correct_cop(raw, params, geometry) - np.asarray(truth, dtype=float)
        total += float(err @ err)
    return total


def _build_design(dataset, geometry: PadGeometry):
    """Stacked Jacobian and residual offset for the (linear) correction model."""
    n = len(dataset)
    J = np.zeros((2 * n, 18))
    r0 = np.zeros(2 * n)
    for k, (raw, truth) in enumerate(dataset):
        raw = np.asarray(raw, dtype=float)
        truth = np.asarray(truth, dtype=float)
        fx, fy = _correction_features(raw, geometry)
        J[2 * k, 0:9] = fx
        J[2 * k + 1, 9:18] = fy
        r0[2 * k: 2 * k + 2] = raw - truth
    return J, r0


def fit_cop_correction(dataset, geometry: PadGeometry) -> CopCorrectionParams:
    """Fit correction coefficients by damped Gauss-Newton least squares.

    ``dataset`` is a sequence of (raw_cop, ground_truth_cop) pairs; 18 or
    more well-spread points determine the 18 coefficients.  The residual is
    linear in the coefficients, so the damped iteration converges in a few
    steps; the Levenberg-style damping also regularizes rank-deficient
    datasets, for which a warning is emitted instead of an error.
    """
    if len(dataset) == 0:
        raise DegenerateFitError("empty CoP calibration dataset")
    J, r0 = _build_design(dataset, geometry)

    # the basis itself can be rank-deficient (it is rank 16 on symmetric
    # equal-radius sensor layouts), so compare against the rank attainable
    # on this geometry's own hole grid rather than against 18
    J_ref, _ = _build_design(
        [(h, h) for h in geometry.calibration_holes], geometry)
    attainable = min(np.linalg.matrix_rank(J_ref), 18)
    rank = np.linalg.matrix_rank(J)
    underdetermined = rank < attainable
    if underdetermined:
        warnings.warn(
            f"CoP correction dataset is under-determined (rank {rank} < "
            f"{attainable} attainable); returning the minimum-norm regularized fit",
            stacklevel=2,
        )

    theta = np.zeros(18)
    lam = 1e-3 if not underdetermined else 1.0
    H = J.T @ J
    # Marquardt scaling: damp relative to each parameter's own curvature so
    # the mixed d^0 / d^1 / d^2 feature scales are treated evenly
    damp = np.diag(np.maximum(np.diag(H), 1e-12 * max(np.diag(H).max(), 1e-300)))
    cost = float(r0 @ r0)
    for _ in range(200):
        r = r0 + J @ theta
        g = J.T @ r
        step = np.linalg.solve(H + lam * damp, -g)
        new_theta = theta + step
        new_r = r0 + J @ new_theta
        new_cost = float(new_r @ new_r)
        if new_cost <= cost:
            rel_drop = (cost - new_cost) / max(cost, 1e-300)
            theta = new_theta
            cost = new_cost
            lam = max(lam * 0.3, 1e-14 if not underdetermined else 1e-6)
            if rel_drop < 1e-10 and lam < 1e-10:
                break
        else:
            lam *= 10.0
            if lam > 1e12:
                break

    params = CopCorrectionParams(theta[0:9].reshape(3, 3), theta[9:18].reshape(3, 3))
    # Guard: the fit must never be worse than doing nothing.
    if cost > float(r0 @ r0) + 1e-12:
        log.warning("CoP correction fit did not improve on zero params; returning zeros")
        return CopCorrectionParams.zero()
    return params


def cop_mae(dataset, params: CopCorrectionParams | None, geometry: PadGeometry) -> float:
    """Mean absolute CoP error (meters) over a (raw, truth) dataset."""
    errs = []
    for raw, truth in dataset:
        p = np.asarray(raw, dtype=float)
        if params is not None:
            p = correct_cop(p, params, geometry)
        errs.append(np.linalg.norm(p - np.asarray(truth, dtype=float)))
    return float(np.mean(errs))


# ---------------------------------------------------------------------------
# Dataset and calibration file I/O
# ---------------------------------------------------------------------------

def load_calibration_csv(path) -> list[dict]:
    """Read a calibration dataset CSV with the documented header row.

    Columns: hole_x_m, hole_y_m, load_kg, f1_N, f2_N, f3_N.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ScenarioFormatError(f"{path}: empty dataset file")
        missing = [c for c in DATASET_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ScenarioFormatError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append({c: float(row[c]) for c in DATASET_COLUMNS})
            except (TypeError, ValueError) as exc:
                raise ScenarioFormatError(f"{path}: bad value at line {lineno}: {exc}") from exc
    if not rows:
        raise ScenarioFormatError(f"{path}: dataset has a header but no rows")
    return rows


def dataset_rows_to_pairs(rows, geometry: PadGeometry) -> list[tuple[np.ndarray, np.ndarray]]:
    """Convert CSV rows to (raw_cop, truth_cop) pairs via the CoP formula."""
    pairs = []
    for row in rows:
        forces = np.array([row["f1_N"], row["f2_N"], row["f3_N"]])
        raw = compute_cop(forces, geometry)
        truth = np.array([row["hole_x_m"], row["hole_y_m"]])
        pairs.append((raw, truth))
    return pairs


def write_dataset_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(DATASET_COLUMNS))
        writer.writeheader()
        for row in rows:
            writer.writerow({c: repr(float(row[c])) for c in DATASET_COLUMNS})


def calibration_to_json(
    params: CopCorrectionParams,
    geometry: PadGeometry,
    mae_before_m: float,
    mae_after_m: float,
) -> dict:
    return {
        "format": "grippad-calibration",
        "version": 1,
        "units": {"length": "m", "force": "N"},
        "pad_radius_m": geometry.radius,
        "sensor_positions_m": geometry.sensor_positions.tolist(),
        "cop_correction": {
            "a_coeffs": params.a_coeffs.tolist(),
            "b_coeffs": params.b_coeffs.tolist(),
        },
        "mae_before_mm": mae_before_m * 1e3,
        "mae_after_mm": mae_after_m * 1e3,
    }


def calibration_from_json(blob: dict) -> tuple[CopCorrectionParams, PadGeometry]:
    if blob.get("format") != "grippad-calibration":
        raise ScenarioFormatError("not a grippad calibration file")
    params = CopCorrectionParams(
        np.array(blob["cop_correction"]["a_coeffs"], dtype=float),
        np.array(blob["cop_correction"]["b_coeffs"], dtype=float),
    )
    radius = float(blob["pad_radius_m"])
    geometry = PadGeometry(
        radius=radius,
        sensor_positions=np.array(blob["sensor_positions_m"], dtype=float),
        calibration_holes=default_calibration_holes(radius),
    )
    return params, geometry


def save_calibration(path, blob: dict) -> None:
    with open(path, "w") as fh:
        json.dump(blob, fh, indent=2, sort_keys=True)
        fh.write("\n")
