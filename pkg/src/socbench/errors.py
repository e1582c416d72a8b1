"""Exception and warning types raised across the toolkit."""


class SocBenchError(Exception):
    """Base class for all toolkit errors."""


class HeaderMissingError(SocBenchError):
    pass


class TargetColumnMissingError(SocBenchError, KeyError):
    pass


class EmptyAfterCleaningError(SocBenchError):
    pass


class InvalidSizeError(SocBenchError, ValueError):
    pass


class NoFeaturesSelectedError(SocBenchError):
    pass


class ZeroVarianceFeatureError(SocBenchError, ValueError):
    def __init__(self, column):
        super().__init__(f"feature {column!r} has zero variance")
        self.column = column


class SchemaMismatchError(SocBenchError, ValueError):
    pass


class InvalidFractionsError(SocBenchError, ValueError):
    pass


class LengthMismatchError(SocBenchError, ValueError):
    pass


class ZeroTargetVarianceError(SocBenchError, ValueError):
    """R2 is undefined; ``partial`` still carries MSE, RMSE and MAE."""

    def __init__(self, partial):
        super().__init__("target has zero variance, R2 is undefined")
        self.partial = partial


class TooFewSamplesError(SocBenchError, ValueError):
    pass


class NotStandardizedError(SocBenchError, ValueError):
    pass


class DimensionMismatchError(SocBenchError, ValueError):
    pass


class ShapeMismatchError(SocBenchError, ValueError):
    pass


class EmptyInputError(SocBenchError, ValueError):
    pass


class InvalidConfigError(SocBenchError, ValueError):
    pass


class HeadDivisibilityError(InvalidConfigError):
    pass


class OddDModelError(InvalidConfigError):
    pass


class InvalidKError(SocBenchError, ValueError):
    pass


class SubsetTooLargeError(SocBenchError, ValueError):
    pass


class NotFittedError(SocBenchError, RuntimeError):
    pass


class RankDeficientWarning(UserWarning):
    pass


class ConvergenceWarning(UserWarning):
    pass


class DataWarning(UserWarning):
    pass
