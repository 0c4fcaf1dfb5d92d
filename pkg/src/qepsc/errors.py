"""Exception types shared across the package."""


class QepscError(Exception):
    """Base class for all errors raised by this package."""


class MissingVariable(QepscError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable: {name}")
        self.name = name


class NonFiniteResult(QepscError):
    pass


class UnsupportedExponent(QepscError):
    pass


class DslSyntaxError(QepscError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class DuplicateDefinition(QepscError):
    pass


class ConfigError(QepscError):
    def __init__(self, key: str, message: str = ""):
        super().__init__(f"bad gate-set entry {key!r}: {message}")
        self.key = key


class UnknownGate(QepscError):
    pass


class NotApplicable(QepscError):
    """A rewrite's structural precondition did not match."""


class NegativeTripCount(QepscError):
    pass


class NonIntegerBound(QepscError):
    """A loop bound evaluated to a non-integer value."""


class InvalidRepetitions(QepscError):
    pass


class Infeasible(QepscError):
    """No feasible assignment was found by the optimizer."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class ValidationFailed(QepscError):
    def __init__(self, diagnostics):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics
