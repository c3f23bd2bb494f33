"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front-end:
2 for usage problems, 3 for unreadable input data, 4 for numerically
degenerate input (all zeros, constant series, too short, ...).
"""


class IlliqError(ValueError):
    exit_code = 4


class UsageError(IlliqError):
    exit_code = 2


class InvalidLevel(UsageError):
    pass


class InvalidConfig(UsageError):
    pass


class UnsupportedForGarch(UsageError):
    pass


class DataError(IlliqError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class InputFileNotFound(DataError):
    pass


class NumericalError(IlliqError):
    exit_code = 4


class EmptySeries(NumericalError):
    pass


class AllZero(NumericalError):
    pass


class NonFiniteValue(NumericalError):
    pass


class InsufficientData(NumericalError):
    pass


class ZeroVariance(NumericalError):
    pass


class LengthMismatch(NumericalError):
    pass


class CurveLengthMismatch(LengthMismatch):
    pass


class NonPositiveCurveMean(NumericalError):
    pass


class DegenerateBandwidth(NumericalError):
    pass


class AllBandwidthsDegenerate(DegenerateBandwidth):
    pass


class TooFewNonzero(NumericalError):
    pass
