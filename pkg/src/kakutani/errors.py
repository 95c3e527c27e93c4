"""Exception hierarchy shared by every module of the package."""


class KakutaniError(Exception):
    """Base class for all errors raised by this package."""


class SystemInvalid(KakutaniError, ValueError):
    """A branch system fails one of its structural checks."""


class GapOrOverlap(SystemInvalid):
    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class NotContracting(SystemInvalid):
    pass


class NotIncreasing(SystemInvalid):
    pass


class ConjugacyInvalid(SystemInvalid):
    pass


class BadSymbol(KakutaniError, ValueError):
    pass


class DepthExceeded(KakutaniError):
    pass


class EmptyWord(KakutaniError, ValueError):
    pass


class NoConvergence(KakutaniError, ArithmeticError):
    pass


class BudgetExceeded(KakutaniError):
    pass


class PeriodBudgetExceeded(BudgetExceeded):
    pass


class EmptyLedger(KakutaniError, ValueError):
    pass


class EmptyInput(KakutaniError, ValueError):
    pass


class NonPositiveVector(KakutaniError, ArithmeticError):
    pass


class DepthTooShallow(KakutaniError, ValueError):
    pass


class ZeroDenominator(KakutaniError, ZeroDivisionError):
    pass


class NotLattice(KakutaniError):
    pass


class ReductionUnstable(KakutaniError):
    pass


class QuadratureFailure(KakutaniError):
    pass


class ConfigInvalid(KakutaniError, ValueError):
    pass


class TaskFailed(KakutaniError):
    pass


class GoldenMismatch(KakutaniError):
    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)
