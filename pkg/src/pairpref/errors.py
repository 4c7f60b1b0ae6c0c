"""Exception types raised across pairpref."""


class PairPrefError(Exception):
    """Base class for all library errors."""


class DimensionError(PairPrefError, ValueError):
    """Shapes do not conform, or an index falls outside the matrix."""


class SingularMatrixError(PairPrefError, ValueError):
    """A matrix that must be inverted is (numerically) singular."""


class InsufficientSamplesError(PairPrefError, ValueError):
    """An estimate was requested for an entry that was never sampled."""


class DataFormatError(PairPrefError, ValueError):
    """An input file is malformed or violates a model invariant."""
