"""Friction limit curves for a circular pad pressed on a flat surface.

The pad sees a pressure field p(x) = a*x + p0 over its disk (uniform when
the pad is perfectly seated, linearly skewed when the compliant joint is
deflected).  Sliding of the gripped object is modeled as a pure rotation
about an instantaneous center of rotation (CoR); integrating Coulomb
friction over the disk for every CoR position traces the limit curve in
(tangential force, torque) space.  A wrench inside the curve is held, on
the curve slides steadily, outside accelerates into slip.

Sign conventions, fixed repo-wide:

* ``unit_velocity`` rotates (point - cor) by +90 deg (counterclockwise
  rotation positive).
* Limit-curve samples store the signed tangential-force component along
  the gravity-countering axis and the signed torque about the pad normal;
  the curve is closed (both senses of rotation) and centrally symmetric.

Everything in this module is a pure function; the only state is a small
deterministic cache of normalized limit curves.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import InfeasibleGripError, QuadratureAccuracyError


# Pressure positivity over the disk bounds the CoP offset used by the
# linear-field model; beyond it the field would go negative at the rim.
COP_OFFSET_CLAMP_FRACTION = 0.25

DEFAULT_MU = 0.5
DEFAULT_RADIUS = 0.03

_QUAD_NR = 32
_QUAD_NTHETA = 128


# ---------------------------------------------------------------------------
# Pressure field
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PressureField:
    """Linear pressure distribution p(x) = gradient * (x . dir) + mean.

    ``mean`` is total normal force / disk area; ``gradient`` tilts the
    field along ``gradient_direction`` (a unit vector in the pad frame).
    """

    mean: float
    gradient: float
    gradient_direction: np.ndarray
    radius: float

    def __post_init__(self):
        d = np.asarray(self.gradient_direction, dtype=float)
        object.__setattr__(self, "gradient_direction", d)
        if d.shape != (2,):
            raise ValueError("gradient_direction must be a planar vector")
        if self.radius <= 0 or not np.isfinite(self.radius):
            raise ValueError(f"pad radius must be positive, got {self.radius}")
        if self.mean < 0 or not np.isfinite(self.mean):
            raise ValueError(f"mean pressure must be nonnegative, got {self.mean}")
        n = np.linalg.norm(d)
        if self.gradient != 0.0 and abs(n - 1.0) > 1e-9:
            raise ValueError("gradient_direction must be a unit vector")
        # negative pressure anywhere on the disk means the model is invalid
        if abs(self.gradient) * self.radius > self.mean * (1 + 1e-9):
            raise ValueError(
                "pressure field goes negative on the disk: "
                f"|a|R = {abs(self.gradient) * self.radius:.6g} > p0 = {self.mean:.6g}"
            )

    @property
    def normal_force(self) -> float:
        return float(self.mean * np.pi * self.radius**2)

    @property
    def cop_offset(self) -> np.ndarray:
        """Center of pressure of the field, in the pad frame (meters)."""
        if self.normal_force <= 0:
            return np.zeros(2)
        mag = self.gradient * np.pi * self.radius**4 / (4.0 * self.normal_force)
        return mag * self.gradient_direction

    def values(self, points: np.ndarray) -> np.ndarray:
        return self.mean + self.gradient * (points @ self.gradient_direction)

    @classmethod
    def uniform(cls, normal_force: float, radius: float) -> "PressureField":
        return cls(
            mean=normal_force / (np.pi * radius**2),
            gradient=0.0,
            gradient_direction=np.array([1.0, 0.0]),
            radius=radius,
        )

    @classmethod
    def from_cop_offset(cls, normal_force: float, radius: float, cop_offset) -> "PressureField":
        """Linear field whose CoP sits at ``cop_offset`` (clamped for validity)."""
        off = np.atleast_1d(np.asarray(cop_offset, dtype=float))
        if off.shape == (1,):
            off = np.array([off[0], 0.0])
        mag = float(np.linalg.norm(off))
        direction = off / mag if mag > 0 else np.array([1.0, 0.0])
        mag = clamp_cop_offset(mag, radius)
        return cls(
            mean=normal_force / (np.pi * radius**2),
            gradient=gradient_coefficient(normal_force, mag, radius),
            gradient_direction=direction,
            radius=radius,
        )


@dataclass(frozen=True)
class FrictionWrench:
    """Tangential friction force (N, pad-frame vector) and torque (N*m)."""

    force: np.ndarray
    torque: float

    def __post_init__(self):
        f = np.asarray(self.force, dtype=float)
        object.__setattr__(self, "force", f)
        if f.shape != (2,) or not (np.all(np.isfinite(f)) and np.isfinite(self.torque)):
            raise ValueError("friction wrench must be finite and planar")

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.force))


class ContactMode(Enum):
    FULL = "full-contact"
    EDGE = "edge-contact"
    SEPARATED = "separated"


# Universal-joint travel of the compliant pad mount.
JOINT_LIMIT_RAD = np.deg2rad(25.0)


@dataclass(frozen=True)
class ContactState:
    """Resolved pad-surface contact: mode, residual tilt, CoP offset."""

    mode: ContactMode
    tilt: float = 0.0
    cop_offset: np.ndarray = None  # pad frame, meters; None -> origin

    def __post_init__(self):
        off = np.zeros(2) if self.cop_offset is None else np.asarray(self.cop_offset, dtype=float)
        object.__setattr__(self, "cop_offset", off)
        if self.mode is ContactMode.EDGE and not (0.0 <= self.tilt <= np.pi / 2):
            raise ValueError(f"edge-contact tilt out of range: {self.tilt}")


# ---------------------------------------------------------------------------
# Quadrature over the pad disk
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _disk_nodes(n_r: int, n_theta: int) -> tuple[np.ndarray, np.ndarray]:
    """Polar nodes/weights on the unit disk: Gauss-Legendre radially,
    uniform (periodic trapezoid) angularly.  Scaled by callers to radius R."""
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = (x + 1.0) / 2.0
    wr = w / 2.0
    theta = np.arange(n_theta) * (2.0 * np.pi / n_theta)
    rr = np.repeat(r, n_theta)
    tt = np.tile(theta, n_r)
    points = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=1)
    weights = np.repeat(wr, n_theta) * (2.0 * np.pi / n_theta) * rr
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def disk_quadrature(radius: float, n_r: int = _QUAD_NR, n_theta: int = _QUAD_NTHETA):
    """Quadrature points (n, 2) and weights (n,) for a disk of given radius."""
    pts, wts = _disk_nodes(n_r, n_theta)
    return pts * radius, wts * radius**2


# ---------------------------------------------------------------------------
# Friction integrals
# ---------------------------------------------------------------------------

def unit_velocity(point, cor) -> np.ndarray:
    """Unit velocity of ``point`` under counterclockwise rotation about ``cor``.

    Perpendicular to (point - cor); undefined at the CoR itself.
    """
    d = np.asarray(point, dtype=float) - np.asarray(cor, dtype=float)
    n = np.linalg.norm(d)
    if n == 0.0:
        raise ValueError("unit velocity undefined at the center of rotation")
    return np.array([-d[1], d[0]]) / n


def _wrench_arrays(points, weights, pressures, mu, cors):
    """Friction wrench (counterclockwise slide) for a batch of CoRs."""
    d = points[None, :, :] - cors[:, None, :]
    rho = np.hypot(d[..., 0], d[..., 1])
    ok = rho > 0.0
    inv = np.where(ok, 1.0, 0.0) / np.where(ok, rho, 1.0)
    vx = -d[..., 1] * inv
    vy = d[..., 0] * inv
    wp = weights * pressures
    fx = -mu * (wp * vx).sum(axis=1)
    fy = -mu * (wp * vy).sum(axis=1)
    tau = -mu * (wp * (points[:, 0] * vy - points[:, 1] * vx)).sum(axis=1)
    return fx, fy, tau


def friction_wrench_at_cor(
    field: PressureField,
    mu: float,
    cor,
    n_r: int = _QUAD_NR,
    n_theta: int = _QUAD_NTHETA,
    check: bool = False,
) -> FrictionWrench:
    """Integrate the Coulomb friction wrench for a counterclockwise slide
    about ``cor``.

    With ``check=True`` the grid is doubled and a relative change beyond
    1e-4 raises QuadratureAccuracyError.
    """
    if mu <= 0:
        raise ValueError(f"friction coefficient must be positive, got {mu}")
    cor = np.asarray(cor, dtype=float).reshape(1, 2)

    def run(nr, nt):
        pts, wts = disk_quadrature(field.radius, nr, nt)
        fx, fy, tau = _wrench_arrays(pts, wts, field.values(pts), mu, cor)
        return np.array([fx[0], fy[0], tau[0]])

    out = run(n_r, n_theta)
    if check:
        fine = run(2 * n_r, 2 * n_theta)
        scale = max(np.abs(fine).max(), 1e-300)
        rel = np.abs(out - fine).max() / scale
        if rel > 1e-4:
            raise QuadratureAccuracyError(
                f"friction quadrature changed by {rel:.3e} (> 1e-4) on refinement"
            )
    return FrictionWrench(force=out[:2], torque=float(out[2]))


# ---------------------------------------------------------------------------
# Limit curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitCurve:
    """Sampled slip boundary in (tangential force, torque) space.

    ``samples`` is a closed, centrally symmetric polygon (n, 2) with
    columns (force_N, torque_Nm); the first half is the CoR sweep for one
    rotation sense, the second its reflection.  ``a_n``, ``d_i``, ``b_n``
    are the analytic control-line points for the field's CoP offset.
    """

    samples: np.ndarray
    f_max: float
    tau_max: float
    a_n: np.ndarray
    d_i: np.ndarray
    b_n: np.ndarray
    mu: float
    normal_force: float
    radius: float
    cop_offset: float

    def boundary_radius(self, direction: np.ndarray) -> float:
        """Distance from the origin to the boundary along ``direction``,
        measured in normalized (f / f_scale, tau / tau_scale) coordinates."""
        pts = self._normalized_samples()
        d = np.asarray(direction, dtype=float)
        nd = np.linalg.norm(d)
        if nd == 0:
            raise ValueError("direction must be nonzero")
        d = d / nd
        p1 = pts
        p2 = np.roll(pts, -1, axis=0)
        e = p2 - p1
        denom = e[:, 0] * d[1] - e[:, 1] * d[0]
        num = d[0] * p1[:, 1] - d[1] * p1[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(denom) > 1e-15, num / np.where(denom == 0, 1, denom), np.nan)
        hit = p1 + t[:, None] * e
        s = hit @ d
        valid = (t >= -1e-12) & (t <= 1 + 1e-12) & (s > 0)
        if not np.any(valid):
            raise ValueError("containment ray does not cross the limit curve")
        return float(np.min(s[valid]))

    def _scales(self) -> tuple[float, float]:
        fs = max(self.f_max, 1e-300)
        ts = max(float(np.abs(self.samples[:, 1]).max()), 1e-300)
        return fs, ts

    def _normalized_samples(self) -> np.ndarray:
        fs, ts = self._scales()
        return self.samples / np.array([fs, ts])

    def classify(self, wrench, band: float = 1e-3) -> str:
        """Radial containment of a (force, torque) pair: inside/on/outside."""
        w = np.asarray(wrench, dtype=float)
        fs, ts = self._scales()
        wn = w / np.array([fs, ts])
        r = np.linalg.norm(wn)
        if r < 1e-12:
            return "inside"
        rb = self.boundary_radius(wn)
        ratio = r / rb
        if ratio < 1.0 - band:
            return "inside"
        if ratio <= 1.0 + band:
            return "on"
        return "outside"


def _cor_sweep(radius: float, n_cors: int) -> np.ndarray:
    """Log-spaced CoR offsets from -1e3*R to +1e3*R plus the exact center."""
    per_side = max((n_cors - 1) // 2, 4)
    mags = np.logspace(-3.0, 3.0, per_side) * radius
    return np.concatenate([-mags[::-1], [0.0], mags])


def limit_curve(field: PressureField, mu: float, n_cors: int = 96) -> LimitCurve:
    """Sweep CoR positions to sample the slip boundary of ``field``.

    The sweep runs along the axis through the pad center perpendicular to
    the gravity-countering friction direction.  Fields whose CoP is not on
    that axis are rotated onto it first (the curve profile is invariant to
    the CoP's bearing; only its distance from the center matters).
    """
    if n_cors < 32:
        raise ValueError(f"need at least 32 CoR samples, got {n_cors}")
    if mu <= 0:
        raise ValueError(f"friction coefficient must be positive, got {mu}")
    f_n = field.normal_force
    radius = field.radius
    p_mag = float(np.linalg.norm(field.cop_offset))
    canonical = PressureField(
        mean=field.mean,
        gradient=abs(field.gradient),
        gradient_direction=np.array([1.0, 0.0]),
        radius=radius,
    )

    offsets = _cor_sweep(radius, n_cors)
    cors = np.stack([offsets, np.zeros_like(offsets)], axis=1)
    pts, wts = disk_quadrature(radius)
    fx, fy, tau = _wrench_arrays(pts, wts, canonical.values(pts), mu, cors)
    # clockwise slide = negated counterclockwise wrench; it starts the sweep
    # at the pure-translation point with positive force and torque
    half = np.stack([-fy, -tau], axis=1)
    closed = np.concatenate([half, -half], axis=0)

    a_n, d_i, b_n = analytic_points(mu, f_n, radius, p_mag)
    return LimitCurve(
        samples=closed,
        f_max=mu * f_n,
        tau_max=2.0 * mu * f_n * radius / 3.0,
        a_n=a_n,
        d_i=d_i,
        b_n=b_n,
        mu=mu,
        normal_force=f_n,
        radius=radius,
        cop_offset=p_mag,
    )


@lru_cache(maxsize=4096)
def _unit_limit_curve_cached(p_frac_key: int, n_cors: int) -> LimitCurve:
    """Limit curve for mu = 1, f_n = 1, R = 1 with CoP offset key/1e6."""
    p_frac = p_frac_key / 1e6
    field = PressureField.from_cop_offset(1.0, 1.0, np.array([p_frac, 0.0]))
    return limit_curve(field, 1.0, n_cors)


def unit_limit_curve(p_over_r: float, n_cors: int = 96) -> LimitCurve:
    """Cached normalized limit curve keyed on CoP offset / radius.

    Wrench quantities scale linearly in mu and f_n, and lengths in R, so a
    single normalized curve serves every (mu, f_n, R) with the same
    relative CoP offset.  The key is rounded to 1e-6 to keep the cache
    small and the lookup deterministic.
    """
    frac = clamp_cop_offset(abs(p_over_r), 1.0)
    return _unit_limit_curve_cached(int(round(frac * 1e6)), n_cors)


def classify_against_unit_curve(f_t: float, tau: float, mu: float, f_n: float,
                                radius: float, p_offset: float) -> str:
    """check_slip via the normalized-curve cache (fast path for the sim)."""
    if f_n <= 0:
        return "outside" if (abs(f_t) > 0 or abs(tau) > 0) else "inside"
    curve = unit_limit_curve(p_offset / radius)
    return curve.classify((f_t / (mu * f_n), tau / (mu * f_n * radius)))


def check_slip(wrench, curve: LimitCurve) -> str:
    """Classify a (force, torque) pair against a sampled limit curve."""
    return curve.classify(wrench)


# ---------------------------------------------------------------------------
# Closed-form control points and grip-force laws
# ---------------------------------------------------------------------------

def clamp_cop_offset(p: float, radius: float) -> float:
    """Clamp a CoP offset to the pressure-positivity bound (R/4)."""
    limit = COP_OFFSET_CLAMP_FRACTION * radius
    p = abs(float(p))
    if p > limit * (1 + 1e-12):
        warnings.warn(
            f"CoP offset {p:.6g} m exceeds the linear-field bound {limit:.6g} m; clamping",
            stacklevel=3,
        )
        return limit
    return min(p, limit)


def gradient_coefficient(f_n: float, p: float, radius: float) -> float:
    """Pressure gradient a = 4 f_n |P| / (pi R^4) for CoP offset |P|."""
    p = clamp_cop_offset(p, radius)
    return 4.0 * f_n * p / (np.pi * radius**4)


def max_tangential_force(mu: float, f_n: float, theta: float = 0.0) -> float:
    """Pure-translation friction capacity mu * f_n * cos(theta).

    ``theta`` is the pad-surface tilt of an edge contact; zero for full
    contact.
    """
    if f_n < 0:
        raise ValueError(f"normal force must be nonnegative, got {f_n}")
    if not (0.0 <= theta < np.pi / 2):
        raise ValueError(f"tilt angle out of range [0, pi/2): {theta}")
    return mu * f_n * float(np.cos(theta))


def analytic_points(mu: float, f_n: float, radius: float, p: float):
    """Control-line anchor points for CoP offset magnitude ``p``.

    Returns (A_n, D_I, B_n) in the (force, torque) plane:
    A_n = pure-translation point, D_I = max-moment point, B_n = the
    moment-axis intercept of line A_n-D_I.
    """
    p = clamp_cop_offset(p, radius)
    a_n = np.array([mu * f_n, p * mu * f_n])
    d_i = np.array([4.0 * mu * f_n * p / (3.0 * radius), 2.0 * mu * f_n * radius / 3.0])
    b_n = np.array([
        0.0,
        2.0 * mu * f_n * (2.0 * p**2 - radius**2) / (4.0 * p - 3.0 * radius),
    ])
    return a_n, d_i, b_n


def required_grip_force(f_g: float, tau_g: float, mu: float, radius: float) -> float:
    """Normal force putting (f_g, tau_g) on the centered control line:
    f_n = f_g/mu + 3 tau_g / (2 mu R)."""
    if mu <= 0:
        raise InfeasibleGripError(f"cannot resist friction loads with mu = {mu}")
    if f_g < 0 or tau_g < 0:
        raise ValueError("gravity load magnitudes must be nonnegative")
    return f_g / mu + 3.0 * tau_g / (2.0 * mu * radius)


def required_grip_force_offset(f_g: float, tau_g: float, mu: float,
                               radius: float, p: float) -> float:
    """Smallest f_n placing (f_g, tau_g) on or below segment A_n-B_n.

    Both anchor points scale linearly in f_n, so the line constraint is
    linear in f_n and solves in closed form.  Reduces exactly to
    ``required_grip_force`` at p = 0.
    """
    if mu <= 0:
        raise InfeasibleGripError(f"cannot resist friction loads with mu = {mu}")
    if f_g < 0 or tau_g < 0:
        raise ValueError("gravity load magnitudes must be nonnegative")
    p = clamp_cop_offset(p, radius)
    # torque intercepts per unit normal force
    alpha = mu * p                                                   # A_n torque / f_n
    beta = 2.0 * mu * (2.0 * p**2 - radius**2) / (4.0 * p - 3.0 * radius)  # B_n torque / f_n
    if beta <= 0:
        raise InfeasibleGripError("degenerate control line; cannot resist torque")
    f_line = (tau_g - (alpha - beta) * f_g / mu) / beta
    return max(f_line, f_g / mu, 0.0)
