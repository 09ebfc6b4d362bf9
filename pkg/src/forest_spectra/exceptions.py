class ForestSpectraError(Exception):
    """Base class for errors raised by this package."""


class GraphError(ForestSpectraError, ValueError):
    """Invalid graph or matrix contents."""


class GraphFormatError(GraphError):
    """A graph or matrix file could not be parsed.

    ``line`` is the 1-based line number of the offending entry, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NegativeWeight(GraphFormatError):
    pass


class SingularMomentError(ForestSpectraError, ValueError):
    """A moment sequence is singular where a regular one is required."""


class NumericalDegeneracyError(ForestSpectraError, ArithmeticError):
    """A numerical construction broke down (negative weights, stray roots...)."""


class OracleSizeError(ForestSpectraError, ValueError):
    """Dense reference computation refused for a graph above the size cap."""
