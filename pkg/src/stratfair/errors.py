"""Exception types shared across the package."""


class StratFairError(Exception):
    """Base class for all package errors."""


class InvalidCostModelError(StratFairError, ValueError):
    pass


class DegenerateScoreModelError(StratFairError, ValueError):
    pass


class EstimationError(StratFairError, ValueError):
    pass


class LpDimensionError(StratFairError, ValueError):
    pass


class OracleTooLargeError(StratFairError, ValueError):
    pass


class InfeasibleError(StratFairError):
    """A fit has no solution under the requested caps or parity radius."""

    def __init__(self, message, *, min_cap=None):
        super().__init__(message)
        self.min_cap = min_cap


class IngestionError(StratFairError, ValueError):
    pass


class UnknownGroupError(StratFairError, KeyError):
    pass
