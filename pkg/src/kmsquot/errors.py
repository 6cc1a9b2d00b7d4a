"""Exception types shared across the package."""


class KmsError(Exception):
    """Base class for all package errors."""


class FieldMismatch(KmsError):
    pass


class ZeroInversion(KmsError, ZeroDivisionError):
    pass


class FactorizationBudgetExceeded(KmsError):
    pass


class InvalidField(KmsError, ValueError):
    pass


class SingularMatrix(KmsError, ArithmeticError):
    pass


class DimensionMismatch(KmsError, ValueError):
    pass


class BudgetExceeded(KmsError):
    def __init__(self, message, dim=None):
        super().__init__(message)
        self.dim = dim


class NotSinger(KmsError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class SearchExhausted(KmsError, RuntimeError):
    pass


class NoAdmissibleX(KmsError):
    pass


class ConditionFailed(KmsError):
    def __init__(self, message, clause=None):
        super().__init__(message)
        self.clause = clause


class CapExceeded(KmsError):
    def __init__(self, message, enumeration=None):
        super().__init__(message)
        self.enumeration = enumeration


class NotClosed(KmsError):
    pass


class UnknownVertex(KmsError, KeyError):
    pass


class NotConverged(KmsError, RuntimeError):
    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ConfigError(KmsError, ValueError):
    def __init__(self, message, hypothesis=None):
        super().__init__(message)
        self.hypothesis = hypothesis


class FormatError(KmsError, ValueError):
    """Raised when a serialized artifact cannot be parsed."""
