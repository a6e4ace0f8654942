"""Exception hierarchy shared by every sclab module."""


class SclabError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(SclabError, ValueError):
    pass


class NoInverseError(SclabError, ArithmeticError):
    pass


class PointValidationError(SclabError, ValueError):
    """A point does not lie on the curve it was used with."""


class RangeError(SclabError, ValueError):
    """Signature components outside (0, q)."""


class SampleTooSmallError(SclabError, ValueError):
    pass


class RankDeficiencyError(SclabError, ValueError):
    pass


class FittingError(SclabError, ValueError):
    def __init__(self, message, window=None):
        super().__init__(message)
        self.window = window


class EmptyTraceError(SclabError, ValueError):
    pass


class NoCandidateError(SclabError, ValueError):
    """Replay of a SUB/SHIFT sequence hit a contradiction."""


class SkipSample(SclabError):
    """Raised when a sample cannot produce an equation (e.g. s not invertible)."""


class ConfigError(SclabError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NotFittedError(SclabError, AttributeError):
    pass
