"""Exception types shared across the package."""


class DpAttnError(Exception):
    """Base class for every error raised by this package."""


class InvalidMatrix(DpAttnError):
    """Matrix input is malformed: non-square, empty, or non-finite."""


class NotPsd(DpAttnError):
    """An eigenvalue falls below the allowed negative tolerance."""


class SingularMatrix(DpAttnError):
    """Positive definiteness is required but the matrix is (numerically) singular."""


class DimMismatch(DpAttnError):
    """Operands have incompatible dimensions."""


class ParamRange(DpAttnError):
    """A parameter lies outside its admissible range."""


class Overflow(DpAttnError):
    """A transcendental evaluation exceeded the double-precision range."""


class Infeasible(DpAttnError):
    """The requested construction cannot be realized with the given parameters."""


class PreconditionFailed(DpAttnError):
    """A stated precondition of a verification routine does not hold.

    Carries the name of the violated requirement so callers and tests can
    pinpoint which condition broke.
    """

    def __init__(self, requirement: str, message: str = ""):
        self.requirement = requirement
        super().__init__(f"{requirement}: {message}" if message else requirement)
