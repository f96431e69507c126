"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """Input violates a documented precondition."""


class NumericalFailureError(RuntimeError):
    """An iterative numerical routine failed to converge.

    Carries whatever residual information the failing routine could salvage.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class UnsupportedFormError(InvalidArgumentError):
    """Input has the wrong structural form (e.g. not companion form)."""


class AssumptionViolationError(RuntimeError):
    """A standing assumption (A1-type) failed at runtime."""


class HypothesisViolationError(RuntimeError):
    """Stability-theorem hypotheses do not hold for the given candidate.

    The classifier refuses to emit a verdict; the report explains which
    hypothesis failed.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CalibrationError(RuntimeError):
    """Sigma calibration could not reach the requested targets."""
