"""grippad: force-sensing gripper pads, friction limit curves, hybrid grip
control, and a deterministic dual-arm gripping simulator."""

__version__ = "0.1.0"

from .contact import (
    ContactMode,
    ContactState,
    FrictionWrench,
    LimitCurve,
    PressureField,
    analytic_points,
    check_slip,
    friction_wrench_at_cor,
    gradient_coefficient,
    limit_curve,
    max_tangential_force,
    required_grip_force,
    required_grip_force_offset,
    unit_velocity,
)
from .control import (
    AlignmentCommand,
    ControllerGains,
    ForceCommand,
    alignment_step,
    dead_zone,
    force_step,
    regulate_grip,
    rodrigues,
    update_orientation,
    variable_setpoint,
)
from .kinematics import ArmModel, PadPose
from .planner import (
    PlannerConfig,
    Trajectory,
    interpolate_segment,
    plan_trajectory,
    run_tracking,
    segment_force_reference,
    tracking_step,
)
from .sensing import (
    CopCorrectionParams,
    LoadCellCalibration,
    PadGeometry,
    PadMeasurement,
    compute_cop,
    compute_normal_force,
    correct_cop,
    fit_affine,
    fit_cop_correction,
)
from .sim import (
    BoxObject,
    CompliantPad,
    GripSimulator,
    NearestSensorPull,
    PolynomialDistortion,
    contact_resolve,
    gravity_wrench,
    make_calibration_dataset,
    slip_oracle,
    synth_readings,
)
from .experiment import ExperimentResult, run_experiment

__all__ = [name for name in dir() if not name.startswith("_")]
