"""Exception types shared across the laboratory.

The split mirrors the two failure exit codes of the command line front
end: precondition violations (bad inputs, unmet hypotheses) versus
iterative procedures that ran out of budget.
"""


class PinchlabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PinchlabError, ValueError):
    """An input is outside the domain of the requested operation."""


class PreconditionError(PinchlabError, ValueError):
    """A stated hypothesis of an operation does not hold for the input."""


class NonConvergenceError(PinchlabError, RuntimeError):
    """An iterative computation hit its cap before reaching tolerance."""
