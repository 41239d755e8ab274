"""Exception types raised by katlind."""


class KatlindError(Exception):
    """Base class for every error raised by this package."""


class NotHermitian(KatlindError, ValueError):
    pass


class NotPSD(KatlindError, ValueError):
    pass


class NotPositiveDefinite(KatlindError, ValueError):
    pass


class NoConvergence(KatlindError, ArithmeticError):
    pass


class TailTooHeavy(KatlindError, ValueError):
    """Coherent amplitude too large for the truncation dimension."""


class DimensionTooLarge(KatlindError, MemoryError):
    pass


class InvalidState(KatlindError, ValueError):
    """Matrix is not a valid density matrix within tolerance."""


class StepUnderflow(KatlindError, ArithmeticError):
    pass


class PositivityLost(KatlindError, ArithmeticError):
    pass


class RankMismatch(KatlindError, ArithmeticError):
    pass


class IllConditionedPairing(KatlindError, ArithmeticError):
    pass


class ConfigError(KatlindError, ValueError):
    pass
