"""
Domain exceptions shared across the schinzel_lab modules.

Component-specific errors (ShardEngineError, WriterError, ExperimentExecutionError)
live next to the component that raises them.
"""


class BudgetExceededError(Exception):
    """Raised when a factoring, enumeration or sieve budget is exhausted."""

    pass


class FactoringBudgetError(BudgetExceededError):
    """Raised when Pollard-rho runs out of iterations on a composite cofactor."""

    pass


class InvariantViolationError(Exception):
    """Raised when an internal mathematical invariant fails (an implementation bug)."""

    pass


class HypothesisError(ValueError):
    """Raised when the preconditions of an operation are not met."""

    def __init__(self, hypothesis: str, detail: str = ""):
        self.hypothesis = hypothesis
        message = f"hypothesis '{hypothesis}' violated"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
