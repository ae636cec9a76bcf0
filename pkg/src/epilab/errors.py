"""Exception hierarchy shared by every epilab module."""


class EpilabError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(EpilabError, ValueError):
    pass


class NumericalFailure(EpilabError, ArithmeticError):
    pass


class NonSmoothDensity(EpilabError, ValueError):
    """Score or Fisher information requested for a density with a jump."""


class DomainError(EpilabError, ValueError):
    pass


class HeavyTail(EpilabError, ValueError):
    """Second moments requested for a law without finite covariance."""


class SupportMismatch(EpilabError, ValueError):
    pass


class NonGaussianPositiveT(EpilabError, ValueError):
    pass


class UnsupportedConvolution(EpilabError, NotImplementedError):
    pass


class RankDeficient(EpilabError, ValueError):
    pass


class UnsupportedDimension(EpilabError, NotImplementedError):
    pass


class ConstraintViolated(EpilabError, ValueError):
    pass


class ConvergenceFailure(EpilabError, ArithmeticError):
    pass


class Infeasible(EpilabError, ValueError):
    pass


class ConfigError(EpilabError, ValueError):
    """Invalid experiment configuration; ``where`` locates the offending field."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class TruncationWarning(UserWarning):
    """A truncated tail contributes more than half of the error budget."""
