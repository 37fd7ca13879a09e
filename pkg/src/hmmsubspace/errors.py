"""Exception hierarchy shared across the package."""


class HmmSubspaceError(Exception):
    """Base class for all domain errors raised by this package."""


class NotStochastic(HmmSubspaceError):
    pass


class NotErgodic(HmmSubspaceError):
    pass


class NumericalFailure(HmmSubspaceError):
    pass


class SingularCore(HmmSubspaceError):
    """The compressed matrix on the complement of the simplex direction is singular."""


class OrderTooLarge(HmmSubspaceError):
    pass


class DegenerateStates(HmmSubspaceError):
    """Estimated state sequence is rank deficient; the model order does not fit the data."""


class NoConvergence(HmmSubspaceError):
    pass


class ConditionCViolated(HmmSubspaceError):
    """The zero eigenvalue of the emission noise covariance R is not simple."""


class ZeroLikelihood(HmmSubspaceError):
    pass
