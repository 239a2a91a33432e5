"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes, so the split between "input was bad",
"the check ran and failed" and "the check refused to run" matters.
"""


class ExpanderError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ExpanderError, ValueError):
    """Input violates a documented precondition."""


class GraphFormatError(ValidationError):
    """A graph file could not be parsed."""


class CompositionError(ValidationError):
    """Outer graph and gadget are incompatible."""


class BudgetExceeded(ExpanderError):
    """Exact enumeration would exceed the configured budget."""


class ConvergenceError(ExpanderError):
    """An iterative eigensolver did not converge."""


class SearchExhausted(ExpanderError):
    """Gadget search ran out of attempts.

    ``best`` holds ``(graph, certificate)`` of the candidate with the highest
    worst ratio seen, or ``None`` if no attempt completed.
    """

    def __init__(self, message, best=None, attempts=0):
        super().__init__(message)
        self.best = best
        self.attempts = attempts


class PipelineError(ExpanderError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
