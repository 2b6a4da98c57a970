"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`TefsError`.
:class:`ValidationError` covers bad inputs and configuration (CLI exit code 2);
:class:`EstimationError` covers numerical failures on valid inputs (exit code 1).
"""


class TefsError(Exception):
    exit_code = 1


class ValidationError(TefsError, ValueError):
    exit_code = 2


class EstimationError(TefsError, ArithmeticError):
    exit_code = 1


# --- timeseries -----------------------------------------------------------

class MissingColumn(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, row, col, value=None):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"cannot parse {value!r} as a real number (row {row}, column {col!r})")


class NonFiniteValue(ValidationError):
    def __init__(self, row, col):
        self.row, self.col = row, col
        super().__init__(f"non-finite value at row {row}, column {col!r}")


class TooFewRows(ValidationError):
    pass


class ZeroVariance(ValidationError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} has zero variance")


class LagTooLarge(ValidationError):
    pass


class EmptyResult(ValidationError):
    pass


class DegenerateSplit(ValidationError):
    pass


# --- estimators -----------------------------------------------------------

class RowCountMismatch(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class NonIntegerSymbols(ValidationError):
    pass


class OverlappingSets(ValidationError):
    pass


class InvalidParams(ValidationError):
    pass


class SingularCovariance(EstimationError):
    pass


# --- scm ------------------------------------------------------------------

class InvalidSpec(ValidationError):
    pass


class UnknownGraph(ValidationError):
    pass


class Unstable(EstimationError):
    pass


# --- selection / evaluation -----------------------------------------------

class MissingTotalTe(ValidationError):
    pass


class EmptyDenominator(ValidationError):
    pass


class SingularDesign(EstimationError):
    pass
