"""Exception hierarchy shared by every module of the package."""


class LiouskinError(Exception):
    """Base class for all errors raised by liouskin."""


class InvalidLatticeError(LiouskinError, ValueError):
    pass


class InvalidProbabilityError(LiouskinError, ValueError):
    pass


class ShapeError(LiouskinError, ValueError):
    pass


class CapacityError(LiouskinError):
    """Dense Liouvillian storage would exceed the configured size guard."""


class DegenerateSteadyStateError(LiouskinError):
    pass


class UndefinedMetricError(LiouskinError, ValueError):
    pass


class EvolutionError(LiouskinError):
    """Integrator failure; ``last_good_time`` records how far it got."""

    def __init__(self, message, last_good_time=None):
        super().__init__(message)
        self.last_good_time = last_good_time


class ConstructionError(LiouskinError):
    pass


class DomainError(LiouskinError, ValueError):
    pass


class FitDomainError(LiouskinError, ValueError):
    pass


class InsufficientRangeError(LiouskinError, ValueError):
    pass


class ExperimentInvalidError(LiouskinError):
    pass


class UnknownExperimentError(LiouskinError, KeyError):
    pass


class RegimeWarning(UserWarning):
    """Hatano-Nelson parameters outside the real-gauge regime (kappa >= 2J)."""
