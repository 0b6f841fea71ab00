"""Exception hierarchy shared by all modules."""


class KCBSError(Exception):
    """Base class for every error raised by this package."""


class DegenerateTarget(KCBSError, ValueError):
    """Target vector has (numerically) no weight on the acted mode pair."""


class ClosureFailure(KCBSError, ValueError):
    """Target vector leaks onto the mode that must stay untouched."""


class IncompatiblePair(KCBSError, ValueError):
    """Two observables asked to share a context are not orthogonal."""


class InvalidStage(KCBSError, ValueError):
    pass


class InvalidN(KCBSError, ValueError):
    pass


class EmptyTally(KCBSError, RuntimeError):
    """No shots left to estimate from (e.g. everything was postselected away)."""


class ConfigError(KCBSError, ValueError):
    pass
