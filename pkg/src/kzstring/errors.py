"""Exception hierarchy shared by every module of the package."""


class KZStringError(Exception):
    """Base class for all errors raised by kzstring."""


class ConfigError(KZStringError, ValueError):
    """Invalid scenario configuration or curve presentation.

    ``key`` names the offending configuration entry when known.
    """

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class NumericalError(KZStringError, ArithmeticError):
    """Base class for numerical failures (degeneration, NaN, lost brackets)."""


class DegenerateCurveError(NumericalError):
    """The curve is not immersed: |p'| fell below the immersion threshold."""


class SpaceLikeError(NumericalError):
    """Negative characteristic discriminant, i.e. a space-like point."""

    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta


class GapCollapseError(NumericalError):
    """The characteristic speeds merged (lambda_+ - lambda_- below threshold)."""

    def __init__(self, message, theta=None, time=None):
        super().__init__(message)
        self.theta = theta
        self.time = time


class BracketError(NumericalError):
    """A monotone inversion could not bracket its root."""


class DomainOfDependenceError(NumericalError):
    """Evaluation requested outside the data available for a line string."""


class CFLError(NumericalError):
    """Time step adaptation could not restore the CFL bound."""
