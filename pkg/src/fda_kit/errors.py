"""Exception taxonomy shared by every module.

Two broad families matter for the CLI exit codes and the HTTP service:
``DataError`` (malformed inputs, files, schemas) and ``NumericalError``
(valid inputs on which the requested computation is undefined or failed).
"""


class FdaKitError(Exception):
    """Base class for all library errors."""


class DataError(FdaKitError):
    """Malformed input data, files, or schemas (CLI exit code 2, HTTP 400)."""


class NumericalError(FdaKitError):
    """Computation undefined or failed on valid input (CLI exit 3, HTTP 422)."""


# --- representation ---------------------------------------------------------

class NonIncreasingGrid(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class OutsideDomain(NumericalError):
    pass


class GridMismatch(NumericalError):
    pass


class BasisMismatch(NumericalError):
    pass


class InsufficientPoints(NumericalError):
    pass


# --- smoothing --------------------------------------------------------------

class DegenerateRow(NumericalError):
    pass


class LeverageOne(NumericalError):
    pass


class PenaltyUndefined(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class AllCandidatesFailed(NumericalError):
    pass


# --- registration -----------------------------------------------------------

class NonMonotoneLandmarks(DataError):
    pass


# --- dimensionality reduction -----------------------------------------------

class TooManyComponents(NumericalError):
    pass


class DegenerateSample(NumericalError):
    pass


class SingularCovariance(NumericalError):
    pass


class NoMaximaFound(NumericalError):
    pass


class DegenerateVariance(NumericalError):
    pass


# --- exploratory ------------------------------------------------------------

class InsufficientSample(NumericalError):
    pass


class DegenerateScale(NumericalError):
    pass


# --- simulation / io --------------------------------------------------------

class NotPositiveDefinite(NumericalError):
    pass


class ParseError(DataError):
    pass


class SchemaError(DataError):
    pass
