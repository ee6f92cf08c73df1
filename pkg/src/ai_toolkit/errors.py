"""Exception types raised by the toolkit."""


class AIToolkitError(Exception):
    """Base class for all toolkit errors."""


class DegenerateParamsError(AIToolkitError, ValueError):
    """Parameters violate a structural precondition (normalization, m = 1, a = 0, ...)."""


class UnsupportedCaseError(AIToolkitError):
    """The requested operation has no theory for this parameter case."""


class NotEmbeddableError(UnsupportedCaseError):
    pass


class NumericalError(AIToolkitError):
    """Base class for failures of an iterative or numerical procedure."""


class OffCurveError(NumericalError):
    """A square-root radicand went negative."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConvergenceError(NumericalError):
    pass


class SingularSystemError(NumericalError):
    pass


class AmbiguousSymbolError(NumericalError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
