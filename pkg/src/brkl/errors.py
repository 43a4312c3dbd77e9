"""Exception hierarchy shared by all modules."""


class BrklError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(BrklError, ValueError):
    pass


class NonIncreasingExponents(ValidationError):
    pass


class ExponentBelowTwo(ValidationError):
    pass


class OddLeadingExponent(ValidationError):
    pass


class EmptyGraph(ValidationError):
    pass


class BadDimensions(ValidationError):
    pass


class NonPositiveAlpha(ValidationError):
    pass


class DualUndefined(BrklError):
    pass


class UnsupportedOrder(BrklError, ValueError):
    pass


class RhoTooSmall(BrklError, ValueError):
    pass


class OutOfDomain(BrklError, ValueError):
    pass


class OrderTooHigh(BrklError, ValueError):
    pass


class NoCriticalPoint(BrklError):
    pass


class DegenerateScaling(BrklError, ValueError):
    pass


class BudgetExceeded(BrklError):
    pass


class UnderResolved(BrklError, ValueError):
    pass


class TooLarge(BrklError, ValueError):
    pass


class InsufficientSamples(BrklError):
    pass


class PoorFit(BrklError):
    pass


class ParseError(BrklError):
    pass


class CacheIoError(BrklError):
    pass
