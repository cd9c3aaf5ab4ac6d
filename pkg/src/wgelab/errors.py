"""Exception types raised across wgelab."""


class WgeLabError(Exception):
    """Base class for all wgelab errors."""


class NotSPD(WgeLabError, ValueError):
    pass


class InvalidAlpha(WgeLabError, ValueError):
    pass


class InvalidModel(WgeLabError, ValueError):
    pass


class DegenerateModel(WgeLabError, ValueError):
    """Raised when a linear model has zero score variance (w = 0)."""


class NotOrthogonal(WgeLabError, ValueError):
    pass


class RankDeficient(WgeLabError, ValueError):
    pass


class TooFewSamples(WgeLabError, ValueError):
    pass


class EmptyGroup(WgeLabError, ValueError):
    """Raised when a (class, domain) group has no samples."""

    def __init__(self, message, counts=None):
        super().__init__(message)
        self.counts = counts


class NoConvergence(WgeLabError, RuntimeError):
    pass


class InsufficientPoints(WgeLabError, ValueError):
    pass
