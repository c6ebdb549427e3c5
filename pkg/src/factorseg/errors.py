"""Exception hierarchy for factorseg."""


class FactorsegError(Exception):
    """Base class for all factorseg errors."""


class DataError(FactorsegError):
    """Input data violates a structural requirement (shape, finiteness, positivity)."""


class ConformanceError(FactorsegError):
    """Matrix dimensions do not conform for the requested operation."""


class RankError(FactorsegError):
    """Requested factorization rank is infeasible for the given data."""


class SingularReconstructionError(FactorsegError):
    """Reconstruction WH is zero at a position where the data is positive."""


class RangeError(FactorsegError):
    """A search interval is invalid for the given series."""


class DegenerateSegmentError(FactorsegError):
    """A data segment is too short to be refit."""


class ParameterError(FactorsegError):
    """A parameter is outside its allowed range."""


class RescaleError(FactorsegError):
    """Rescaling produced non-positive entries."""


class AtlasMismatchError(FactorsegError):
    """Adjacency dimension does not match the node atlas."""
