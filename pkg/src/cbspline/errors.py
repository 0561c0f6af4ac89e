"""Exception types shared across the package."""


class CbsplineError(Exception):
    """Base class for all package-specific errors."""


class ZeroLengthSegment(CbsplineError):
    """Two consecutive control points coincide, so no local frame exists."""


class SingularSystem(CbsplineError):
    """The beam-chain system is numerically singular (degenerate geometry)."""


class EmptyMask(CbsplineError):
    """A raster mask contains no foreground pixels."""


class MultipleComponents(CbsplineError):
    """A raster mask contains more than one 8-connected foreground component."""


class CornersNotFound(CbsplineError):
    """Fewer than four qualified corner candidates on a closed contour."""


class StrideTooCoarse(CbsplineError):
    """Silhouette stride cannot satisfy the misalignment-angle bound."""


class NoCornerFound(CbsplineError):
    """No piece with two adjacent straight sides exists."""


class NoCandidate(CbsplineError):
    """No admissible piece/orientation for the current frontier cell."""


class AssemblyStuck(CbsplineError):
    """Greedy assembly reached a frontier cell with no candidate.

    Carries the frontier cell and the best rejected scores for diagnostics.
    """

    def __init__(self, message, cell=None, rejected=None):
        super().__init__(message)
        self.cell = cell
        self.rejected = rejected or []


class ParseError(CbsplineError):
    """An input file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
