"""Exception hierarchy shared by all udisc modules."""


class UdiscError(Exception):
    """Base class for every error raised by this package."""


class NonUnitary(UdiscError, ValueError):
    pass


class DimensionCap(UdiscError, ValueError):
    pass


class NotDistinguishable(UdiscError):
    """The two operations differ at most by a global phase."""


class FormulaDomain(UdiscError, ValueError):
    pass


class VerificationFailed(UdiscError):
    pass


class Infeasible(UdiscError, ValueError):
    pass


class UncalibratedTrain(UdiscError):
    pass


class CalibrationError(UdiscError):
    """Base for calibration failures; carries the per-candidate residual table."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class CalibrationFailed(CalibrationError):
    pass


class CalibrationAmbiguous(CalibrationError):
    pass
