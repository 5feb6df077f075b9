"""Exception hierarchy shared by all modules."""


class GMeasureError(Exception):
    """Base class for every error raised by the package."""


class InvalidParams(GMeasureError, ValueError):
    pass


class UnsupportedPast(GMeasureError):
    pass


class NotAttractive(GMeasureError):
    pass


class NumericalIntegrityError(GMeasureError, ArithmeticError):
    pass


class StateSpaceTooLarge(GMeasureError):
    pass


class LevelOutOfRange(GMeasureError, IndexError):
    pass


class NotDiscrete(GMeasureError):
    pass


class InvalidLabel(GMeasureError, ValueError):
    pass


class NumericalAmbiguity(GMeasureError):
    pass


class InsufficientTail(GMeasureError, ValueError):
    pass


class BlockTooLong(GMeasureError, ValueError):
    pass


class InfiniteMeanBlock(GMeasureError):
    pass


class NotMonotone(GMeasureError):
    """A decomposition failed the per-label monotonicity gate."""


class HorizonExceeded(GMeasureError):
    """No coalescence within the horizon.

    This is an expected outcome in slow-mixing or non-unique regimes, so the
    exception carries whatever was computed before the horizon was hit.
    """

    def __init__(self, depth, position=0, partial=None):
        super().__init__(f"no coalescence at position {position} within depth {depth}")
        self.depth = depth
        self.position = position
        self.partial = partial
        self.replica = None
