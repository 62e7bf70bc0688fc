"""Exception types raised across the package."""


class GMSplitError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(GMSplitError, ValueError):
    pass


class DowndateViolation(GMSplitError, ValueError):
    """A rank-1 downdate would leave the matrix indefinite."""


class Infeasible(GMSplitError, ValueError):
    pass


class ParseError(GMSplitError, ValueError):
    pass


class InvariantViolation(GMSplitError, ValueError):
    pass


class SingularOutputCovariance(GMSplitError, ValueError):
    """The linearly propagated output covariance G P Gᵀ is not invertible."""


class MissingHessian(GMSplitError, ValueError):
    pass


class MissingModel(GMSplitError, ValueError):
    """A sigma-point heuristic was requested without a callable model."""


class OriginSingularity(GMSplitError, ValueError):
    pass


class NonPositiveSMA(GMSplitError, ValueError):
    pass


class IntegrationFailure(GMSplitError, RuntimeError):
    pass


class QuadratureFailure(GMSplitError, RuntimeError):
    pass
