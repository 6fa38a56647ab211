__all__ = ('ProtectiveError', 'NumericalError', 'ConfigError', 'GridMismatch',
           'EmptyCell', 'ZeroState', 'NonHermitianLeak', 'ConvergenceFailure',
           'SolverFailure', 'DegenerateLevel', 'ZeroSurvival',
           'TruncationTooSmall', 'AllCellsBelowThreshold', 'PointerEscaped')


class ProtectiveError(Exception):
    "Base class of every error raised by this package"


class NumericalError(ProtectiveError):
    """A computation could not produce a trustworthy result. The experiment
    scripts exit with code 3 on these."""


class ConfigError(ProtectiveError, ValueError):
    """Invalid experiment configuration. `field` is the dotted name of the
    offending key, e.g. "time.T"."""
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class GridMismatch(ProtectiveError, ValueError):
    pass


class EmptyCell(ProtectiveError, ValueError):
    pass


class ZeroState(NumericalError):
    pass


class NonHermitianLeak(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class SolverFailure(NumericalError):
    pass


class DegenerateLevel(NumericalError):
    pass


class ZeroSurvival(NumericalError):
    pass


class TruncationTooSmall(NumericalError):
    pass


class AllCellsBelowThreshold(NumericalError):
    pass


class PointerEscaped(NumericalError):
    "The pointer packet reached the edge of its grid"
