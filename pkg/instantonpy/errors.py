"""Exception types raised by instantonpy."""


class InstantonError(Exception):
    """Base class for errors raised by this package."""


class QuadratureNotConverged(InstantonError):
    def __init__(self, value, residual, tol):
        self.value = value
        self.residual = residual
        self.tol = tol
        super().__init__("quadrature residual {:.3e} exceeds requested {:.3e} "
                         "(value {:.15g})".format(residual, tol, value))


class PoleHit(InstantonError, ValueError):
    pass


class OutOfDomain(InstantonError, ValueError):
    pass


class ProfileSupportError(InstantonError, ValueError):
    pass


class StepRejected(InstantonError):
    pass


class FlowNotConverged(InstantonError):
    def __init__(self, message, state=None):
        self.state = state
        super().__init__(message)


class CoulombDiverged(InstantonError):
    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)


class MaxOuterExceeded(CoulombDiverged):
    pass


class CGNotConverged(InstantonError):
    pass


class RegimeMisclassified(InstantonError, ValueError):
    pass


class ZeroField(InstantonError, ValueError):
    pass


class ConfigError(InstantonError, ValueError):
    pass


class LambdaOverflow(InstantonError, OverflowError):
    pass
