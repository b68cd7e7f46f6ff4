"""Exception hierarchy shared by all modules."""


class LyEdgeError(Exception):
    """Base class for every error raised by this package."""


class LatticeTooLarge(LyEdgeError, ValueError):
    pass


class InvalidCoupling(LyEdgeError, ValueError):
    pass


class ZeroOfPolynomial(LyEdgeError, ArithmeticError):
    """The polynomial vanishes (to working precision) at the evaluation point."""


class DegeneratePolynomial(LyEdgeError, ValueError):
    pass


class NonConvergence(LyEdgeError, RuntimeError):
    def __init__(self, message, worst_residual=None):
        super().__init__(message)
        self.worst_residual = worst_residual


class NoGap(LyEdgeError, ValueError):
    pass


class InsufficientZeros(LyEdgeError, ValueError):
    pass


class OutOfModel(LyEdgeError, ValueError):
    """A fitted exponent landed outside the admissible interval (-1, 0).

    The offending estimate is attached so callers can still report it.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class QuadratureNonConvergence(LyEdgeError, RuntimeError):
    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class InsufficientSamples(LyEdgeError, ValueError):
    pass


class NonGeometricGrid(LyEdgeError, ValueError):
    pass


class RootsOffCircle(LyEdgeError, ValueError):
    pass


class OnSupport(LyEdgeError, ValueError):
    pass


class RankDeficient(LyEdgeError, ValueError):
    pass


class FitResidualTooLarge(LyEdgeError, ValueError):
    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class NoBranchPoint(LyEdgeError, ValueError):
    pass


class PhaseUnwrapFailure(LyEdgeError, RuntimeError):
    pass


class RadiusTooLarge(LyEdgeError, ValueError):
    pass
