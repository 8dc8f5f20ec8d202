"""Exception and warning types shared across the package."""


class CurvspecError(Exception):
    """Base class for all package errors."""


class DegenerateImmersion(CurvspecError):
    pass


class FiniteDifferenceUnstable(CurvspecError):
    pass


class UnknownCatalogName(CurvspecError, KeyError):
    pass


class DomainMismatch(CurvspecError):
    pass


class NotClosed(CurvspecError):
    pass


class DegenerateFace(CurvspecError):
    pass


class ZeroVector(CurvspecError):
    pass


class FactorizationFailed(CurvspecError):
    pass


class NoConvergence(CurvspecError):
    pass


class HypothesisViolated(CurvspecError):
    pass


class NonOrientableNeedsClosedForm(CurvspecError):
    pass


class ConfigError(CurvspecError):
    """Config parse error; the message names the offending line or field."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class JobFailed(CurvspecError):
    """A module error raised while running one job, with the job context."""

    def __init__(self, context: str, cause: BaseException):
        self.context = context
        super().__init__(f"{context}: {type(cause).__name__}: {cause}")


class ObtuseWarning(UserWarning):
    """Many cotangent weights are negative; eigenvalues are still computed."""


class NonMonotoneConvergence(UserWarning):
    """Successive refinement errors did not shrink."""
