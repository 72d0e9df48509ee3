"""Exception types shared across the package.

Each error carries an ``exit_code`` used by the command line front end:
2 for usage/configuration problems, 3 for data problems, 4 for anything else.
"""


class CensorBoundsError(Exception):
    exit_code = 4


class DataError(CensorBoundsError):
    exit_code = 3


class ConfigError(CensorBoundsError):
    exit_code = 2


# --- data / input shape problems (exit code 3) ---

class MissingColumn(DataError):
    pass


class NonNumericCell(DataError):
    pass


class NonPositiveTime(DataError):
    pass


class IndicatorOutOfRange(DataError):
    pass


class EmptyDataset(DataError):
    pass


class EmptyTrainingSet(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class TooFewSubjects(DataError):
    pass


class EmptyCell(DataError):
    """A treatment-arm x censoring-status cell required for fitting is empty."""


class UnknownArm(DataError):
    pass


class DegenerateSample(DataError):
    pass


class CellTooSmall(DataError):
    pass


class EmptySubgroup(DataError):
    pass


class EmptySelection(DataError):
    pass


class GridEmpty(DataError):
    pass


# --- configuration problems (exit code 2) ---

class InvalidXiTarget(ConfigError):
    pass


class GammaOutOfRange(ConfigError):
    pass


class GammaBelowOne(ConfigError):
    pass


class ArmsNotDistinct(ConfigError):
    pass


class BandwidthNonPositive(ConfigError):
    pass


class BinNotCovered(ConfigError):
    pass
