"""Exception hierarchy shared across the package.

Two broad families matter for the CLI exit-code contract: ``DataError``
(malformed or missing inputs, exit code 2) and ``NumericError`` (operations
that are mathematically undefined or diverged, exit code 3).
"""


class GazevalError(Exception):
    """Base class for all package-specific errors."""


class DataError(GazevalError):
    """Bad or missing input data (files, schemas, coordinates)."""


class NumericError(GazevalError):
    """Mathematically undefined or numerically failed operation."""


# grid primitives
class ZeroDimension(NumericError):
    """Downscaling would produce a grid with a zero-sized dimension."""


class ConstantMap(NumericError):
    """Standardization is undefined: the map has zero variance."""


class DimensionMismatch(NumericError):
    """Grids that must share dimensions do not."""


# raster / file formats
class MalformedHeader(DataError):
    """Raster file header is not parseable."""


class TruncatedPayload(DataError):
    """Raster payload length disagrees with the declared dimensions."""


class NonFiniteValue(DataError):
    """A NaN or infinity appeared where only finite values are allowed."""


class UnsupportedFormat(DataError):
    """File is not in a format this reader accepts."""


# scanpath CSV
class MissingColumn(DataError):
    """Scanpath CSV lacks one of the required header columns."""


class NonContiguousIndices(DataError):
    """Fixation indices of a scanpath do not form a 1..T sequence."""


class OutOfBounds(DataError):
    """A fixation lies outside the declared image bounds (strict mode)."""


# configuration JSON
class SchemaViolation(DataError):
    """JSON configuration does not match the documented schema."""


class NonPositiveSigma(DataError):
    """Gaussian width must be strictly positive."""


# engine / evaluation
class OutOfBoundsFixation(DataError):
    """A fixation coordinate falls outside the grid it is used on."""


class InsufficientHistory(DataError):
    """Not enough real fixations before the target for the requested step."""


class EmptyDataset(DataError):
    """No usable scanpaths or fixations in the dataset."""


class MismatchedConfig(DataError):
    """Reports being compared were produced under incompatible settings."""


# fitting
class DecodeError(NumericError):
    """Parameter vector cannot be decoded into valid model parameters."""


class NonFiniteObjective(NumericError):
    """Objective or gradient evaluation returned NaN or infinity."""


class LineSearchFailure(NumericError):
    """Optimizer line search failed; carries the best result found so far."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
