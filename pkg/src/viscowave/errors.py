"""Exception types raised across the package."""


class ViscowaveError(Exception):
    """Base class for all package errors."""


class SingularStiffness(ViscowaveError):
    pass


class NotPositiveDefinite(ViscowaveError):
    pass


class OutOfOrder(ViscowaveError):
    """Kernel queried with s > t."""


class HistoryTooShort(ViscowaveError):
    pass


class UnsupportedKind(ViscowaveError):
    pass


class NonPositiveDensity(ViscowaveError):
    pass


class EmptySuperposition(ViscowaveError):
    pass


class NegativeWeight(ViscowaveError):
    pass


class OutOfDomain(ViscowaveError):
    pass


class InsufficientNodes(ViscowaveError):
    def __init__(self, message, approx=None, report=None):
        super().__init__(message)
        self.approx = approx
        self.report = report


class Unstable(ViscowaveError):
    pass


class ModelMismatch(ViscowaveError):
    pass


class ConeOutsideGrid(ViscowaveError):
    pass


class NoFrontDetected(ViscowaveError):
    pass


class InsufficientSnapshots(ViscowaveError):
    pass


class ConfigError(ViscowaveError):
    """Invalid or incomplete configuration / model file."""


class InvalidParameter(ViscowaveError, ValueError):
    """Model parameters violate the sign or monotonicity conditions of their kind."""
