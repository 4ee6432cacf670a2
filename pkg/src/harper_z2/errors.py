"""Exception hierarchy shared by all modules."""


class HarperZ2Error(Exception):
    """Base class for every error raised by this package."""


class ParameterError(HarperZ2Error, ValueError):
    """Invalid or inconsistent model parameters."""


class ShapeError(HarperZ2Error, ValueError):
    """Matrix has the wrong shape for the requested operation."""


class NumericError(HarperZ2Error, ArithmeticError):
    """Non-finite input or output."""


class SolverError(HarperZ2Error, RuntimeError):
    """The eigensolver failed to converge."""


class NoGapError(HarperZ2Error):
    """No spectral gap exists where one was required."""


class DegeneracyError(HarperZ2Error):
    """Bands touch (or an exceptional point appears) on a parameter grid.

    ``point`` holds the grid coordinates of the offending sample so callers
    can report the closing location.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class GridRefinementError(HarperZ2Error):
    """Link overlaps became singular; the grid is too coarse."""


class InconsistencyError(HarperZ2Error):
    """Spin-resolved invariants do not combine into a Z2 index."""
