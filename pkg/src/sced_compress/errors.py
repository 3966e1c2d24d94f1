"""Exception types shared across the package."""


class ScedError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(ScedError, ValueError):
    pass


class SingularMatrix(ScedError, ArithmeticError):
    pass


class NoSignChange(ScedError, ValueError):
    pass


class ParseError(ScedError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ValidationError(ScedError, ValueError):
    """Raised when a parsed object violates a model invariant.

    ``invariant`` is a short keyword such as ``"slack"`` or ``"reactance"``.
    """

    def __init__(self, invariant, message=""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if message else invariant)


class DisconnectedNetwork(ScedError):
    pass


class InvalidSigma(ScedError, ValueError):
    pass


class InvalidSplit(ScedError, ValueError):
    pass


class DegenerateInput(ScedError, ValueError):
    pass


class DimensionTooHigh(ScedError, ValueError):
    pass


class EmptyHoldout(ScedError, ValueError):
    pass


class NumericalBreakdown(ScedError, ArithmeticError):
    pass


class UnknownGroup(ScedError, KeyError):
    pass


class RequiresOptimal(ScedError):
    pass


class MissingHalfspaces(ScedError, ValueError):
    pass


class DomainError(ScedError, ValueError):
    pass


class RootBracketFailure(ScedError, ArithmeticError):
    pass


class TargetUnreachable(ScedError):
    pass


class ConfigError(ScedError, ValueError):
    pass


class DegenerateWarning(UserWarning):
    """Support-scenario removal behaves inconsistently (non-degeneracy fails)."""
