"""Exception hierarchy.

Every error carries a stable ``code`` used by the CLI report.
"""


class MartcobError(Exception):
    code = "MartcobError"

    def __init__(self, message=""):
        super().__init__(message)
        self.message = message

    def as_dict(self):
        return {"error": type(self).__name__, "message": self.message}


# construction / validation
class FactorError(MartcobError):
    pass


class NonStochasticMatrix(FactorError):
    pass


class NegativeProbability(FactorError):
    pass


class NoStationaryDistribution(FactorError):
    pass


class ZeroMeasureState(FactorError):
    pass


class SystemMismatch(MartcobError):
    pass


class WindowError(MartcobError):
    """Table length or shape does not match the declared window."""


class SizeCapExceeded(MartcobError):
    pass


# operators
class SameDirection(MartcobError):
    pass


class PeriodicChainUnsupported(MartcobError):
    pass


# poisson
class PreconditionError(MartcobError):
    pass


class NotNormal(PreconditionError):
    pass


class NotStrictlyNormal(PreconditionError):
    pass


class Unsolvable(PreconditionError):
    pass


class NotSolvable(Unsolvable):
    pass


class NoConvergence(PreconditionError):
    pass


class DimensionNotOne(PreconditionError):
    pass


# decomposition
class ResidualNonzero(PreconditionError):
    pass


class SumsDiffer(PreconditionError):
    pass


class InternalIdentityViolation(MartcobError):
    """An identity that is a theorem failed numerically: a bug, not bad input."""


class ParseError(MartcobError):
    """Malformed input document."""
