"""Exception types shared across the package.

Every error raised by lapdeform derives from :class:`LapDeformError` so
callers (and the CLI) can map failures to exit codes uniformly.
"""


class LapDeformError(Exception):
    """Base class for all lapdeform errors."""


class DataError(LapDeformError):
    """Malformed input: files, shapes, indices (CLI exit code 2)."""


class NumericalError(LapDeformError):
    """A numerical procedure failed to converge or broke down (CLI exit code 3)."""


class ParseError(DataError):
    def __init__(self, path, line, reason):
        self.path = str(path)
        self.line = line
        self.reason = reason
        super().__init__(f"{path}:{line}: {reason}")


class EmptyCloud(DataError):
    pass


class IndexOutOfRange(DataError):
    pass


class DegenerateTet(DataError):
    pass


class DegenerateCloud(DataError):
    pass


class UnsupportedKind(DataError):
    pass


class NonPositiveMass(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class PatternMismatch(DataError):
    pass


class TooManyHandles(DataError):
    pass


class Disconnected(NumericalError):
    """Some vertex has no path to any handle in the energy sparsity graph."""


class MaxIterations(NumericalError):
    pass


class NotPSD(NumericalError):
    """Factorization of the reduced QP system failed beyond regularization."""


class DivergedLoss(NumericalError):
    """Training loss became NaN/Inf; aborted with the last finite checkpoint."""


class BadMagic(DataError):
    pass


class VersionMismatch(DataError):
    pass


class TruncatedFile(DataError):
    pass
