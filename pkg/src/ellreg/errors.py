"""Exception types raised across the package."""


class EllRegError(ValueError):
    """Base class for all package errors."""


class DimensionMismatchError(EllRegError):
    pass


class RankDeficiencyError(EllRegError):
    def __init__(self, name, rank, expected):
        self.name = name
        self.rank = rank
        self.expected = expected
        super().__init__(f"{name} is rank deficient: rank {rank}, expected {expected}")


class NotPositiveDefiniteError(EllRegError):
    pass


class UnsupportedError(EllRegError):
    """Requested operation is not defined for the given inputs (e.g. q < 3)."""


class UnsupportedFamilyError(UnsupportedError):
    pass


class QuadratureError(EllRegError):
    pass


class TruncationError(EllRegError):
    """Series could not reach the requested tail bound within the term cap."""


class PoleError(EllRegError):
    pass


class DegenerateStatisticError(EllRegError):
    """Test statistic (or S^2) is zero where a division by it is required."""


class ConvergenceError(EllRegError):
    def __init__(self, message, bracket=None):
        self.bracket = bracket
        super().__init__(message if bracket is None else f"{message} (bracket {bracket})")
