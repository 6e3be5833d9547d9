"""Exception types raised across the library."""


class LapBcvError(Exception):
    """Base class for all library errors."""


class NonFiniteInput(LapBcvError, ValueError):
    """Input matrix contains NaN or Inf entries."""


class GammaOutOfRange(LapBcvError, ValueError):
    """RBF width parameter must be strictly positive."""


class ZeroDegree(LapBcvError, ValueError):
    """A graph node has non-positive degree (external weight matrix only)."""


class SingularAfterRegularization(LapBcvError):
    """The regularized Laplacian could not be inverted to tolerance.

    Signals that the regularization scale is too small for this matrix at
    working precision; the caller should increase it.
    """


class TooSmall(LapBcvError, ValueError):
    """Matrix too small to split into four quadrants (n < 4)."""


class RankOutOfRange(LapBcvError, ValueError):
    """Requested truncation rank is outside [1, h]."""


class EigensolverFailure(LapBcvError):
    """Generalized eigenproblem did not converge."""


class DegenerateInput(LapBcvError, ValueError):
    """All points identical with more than one cluster requested."""


class SeparationUnsatisfiable(LapBcvError):
    """Rejection sampling could not place cluster centers far enough apart."""


class EmptyGrid(LapBcvError, ValueError):
    """No fully populated regularization slice to search for minima."""


class UnknownPreset(LapBcvError, ValueError):
    """Preset name not recognized."""


class ParseError(LapBcvError, ValueError):
    """Input file could not be parsed; carries a 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
