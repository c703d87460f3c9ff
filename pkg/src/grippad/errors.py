"""Exception types shared across the package.

The CLI maps these onto stable exit codes: input/format problems -> 2,
numerical failures -> 3, simulation integrity violations -> 4.
"""


class GrippadError(Exception):
    """Base class for all package-specific errors."""


class InvalidMeasurementError(GrippadError, ValueError):
    """Raised when sensor readings are non-finite or otherwise unusable."""


class UndefinedCopError(GrippadError, ValueError):
    """Raised when the center of pressure is undefined (all-zero forces)."""


class DegenerateFitError(GrippadError, ValueError):
    """Raised when a calibration fit has no unique solution (rank loss)."""


class QuadratureAccuracyError(GrippadError, ArithmeticError):
    """Raised when grid refinement changes a quadrature result too much."""


class InfeasibleGripError(GrippadError, ValueError):
    """Raised when no finite grip force can hold the requested wrench."""


class PlanningError(GrippadError, RuntimeError):
    """Raised when trajectory optimization fails; carries a report dict."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class ScenarioFormatError(GrippadError, ValueError):
    """Raised for malformed scenario / dataset / trace input files."""


class TraceSchemaError(GrippadError, ValueError):
    """Raised when trace files passed to the report tool do not line up."""


class SimulationIntegrityError(GrippadError, RuntimeError):
    """Raised when the simulator state becomes physically meaningless."""
