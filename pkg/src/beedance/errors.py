"""Exception hierarchy.

Every library error belongs to exactly one of three categories, which the
CLI maps to exit codes: usage (1), data (2) and convergence (3).
"""


class BeeDanceError(Exception):
    """Base class for all library errors."""

    exit_code = 2


class UsageError(BeeDanceError):
    exit_code = 1


class DataError(BeeDanceError):
    """Input data violates a precondition."""

    exit_code = 2


class ConvergenceError(BeeDanceError):
    exit_code = 3


# -- signal / monitor -------------------------------------------------------


class EmptyWindow(DataError):
    pass


class InvalidWindow(DataError):
    pass


class TooShort(DataError):
    pass


class InvalidAngle(DataError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class OutOfOrder(DataError):
    pass


class InvalidConfig(DataError):
    pass


# -- features / evaluation --------------------------------------------------


class TooFewRows(DataError):
    pass


class InvalidK(DataError):
    pass


class ShapeError(DataError):
    pass


class InvalidInput(DataError):
    pass


class DegenerateLabels(DataError):
    pass


class DegenerateFold(DataError):
    def __init__(self, message, fold=None):
        super().__init__(message)
        self.fold = fold


# -- io ---------------------------------------------------------------------


class ParseError(DataError):
    """Malformed file. Carries a line number (CSV) or byte offset (model files)."""

    def __init__(self, message, line=None, offset=None):
        super().__init__(message)
        self.line = line
        self.offset = offset


class InvalidLabel(DataError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class GapError(DataError):
    pass


class UnsupportedVersion(DataError):
    pass


class InvalidSpec(DataError):
    pass


class ConvergenceFailure(ConvergenceError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair
