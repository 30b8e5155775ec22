from __future__ import annotations


class StaffdimError(Exception):
    """Base class for every error raised by the staffing solver."""


class InstanceFormatError(StaffdimError):
    """An instance or scenario file cannot be read or parsed."""


class InstanceValidationError(StaffdimError, ValueError):
    """Input data violates an invariant; the message names it."""


class InfeasibleDemandError(StaffdimError):
    """A single demand unit does not fit into one working day."""


class CalibrationError(StaffdimError, ValueError):
    pass


class MasterInfeasibleError(StaffdimError):
    pass


class MissingAssignmentsError(StaffdimError):
    def __init__(self, message: str | None = None):
        super().__init__(
            message
            or "Requirement matrix has no retained assignments; re-solve with --keep-assignments."
        )
