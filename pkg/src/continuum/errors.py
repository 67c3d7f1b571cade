"""Exception hierarchy.

The CLI maps the three families onto exit codes: configuration problems
exit with 2, bad input data with 3 and numerical failures with 4.
"""


class ContinuumError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ContinuumError, ValueError):
    """Invalid parameters or run configuration."""


class DataError(ContinuumError, ValueError):
    """Input data that violates a precondition."""


class InvalidDataError(DataError):
    pass


class InvalidLabelsError(DataError):
    pass


class CsvParseError(DataError):
    pass


class StratificationError(DataError):
    pass


class NumericalError(ContinuumError, ArithmeticError):
    """A computation that cannot proceed on otherwise valid input."""


class RankError(NumericalError):
    pass


class DegenerateMeansError(NumericalError):
    pass


class SingularShiftError(NumericalError):
    pass


class NotApplicableError(NumericalError):
    pass


class UndefinedGradientError(NumericalError):
    pass


class DeflationRankError(NumericalError):
    pass


class FitError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    """Iteration cap reached; ``best`` holds the best iterate found."""

    def __init__(self, message, best=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.iterations = iterations
