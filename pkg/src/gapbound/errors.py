"""Exception types shared across the package.

The CLI maps these onto its stable exit codes, so the split mirrors that
contract: parse problems, violated preconditions, exhausted budgets, and
solver diagnostics are distinct failure kinds.
"""


class GapboundError(Exception):
    """Base class for all package-specific errors."""


class InstanceParseError(GapboundError):
    """Malformed instance/config document.

    line/column are 1-based positions when the underlying problem was a
    JSON syntax error; both are None for structural problems.
    """

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class DimensionMismatchError(GapboundError):
    """Vector or polynomial arity does not match the ambient dimension."""


class InfeasiblePointError(GapboundError):
    """A point required to lie in the feasible set does not."""


class UnsupportedSetError(GapboundError):
    """The feasible set lacks the structure an operation needs."""


class EmptySetError(GapboundError):
    """The feasible set was detected to be empty."""


class BudgetExhaustedError(GapboundError):
    """A sampling or iteration budget ran out before the goal was met."""


class DegenerateFitError(GapboundError):
    """Regression data is degenerate (too few points or no spread)."""


class SolverConvergenceError(GapboundError):
    """An inner numerical routine failed to reach its tolerance."""
