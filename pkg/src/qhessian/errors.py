class QHessianError(Exception):
    exit_code = 1


class PairingFailure(QHessianError):
    """Spectrum of the complex adjoint could not be split into doubled pairs."""

    exit_code = 3


class ShapeMismatch(QHessianError, ValueError):
    exit_code = 2


class IndexOutOfRange(QHessianError, ValueError):
    exit_code = 2


class ConeViolation(QHessianError):
    exit_code = 1


class DegreeOverflow(QHessianError, ValueError):
    exit_code = 2


class StencilOutOfDomain(QHessianError):
    exit_code = 2


class NonConvergence(QHessianError):
    exit_code = 4


class AdmissibilityLoss(QHessianError):
    exit_code = 5


class BarrierFailure(QHessianError):
    exit_code = 6


class OracleMismatch(QHessianError):
    exit_code = 7


class MalformedInput(QHessianError, ValueError):
    exit_code = 2
