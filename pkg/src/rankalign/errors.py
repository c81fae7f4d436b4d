"""Exception types shared across the package.

Data and modelling errors are kept distinct from plain usage errors so the
command line layer can map them onto different exit codes.
"""


class RankalignError(Exception):
    """Base class for all package-specific errors."""


class DataError(RankalignError):
    """Raised when input data violates the cohort contract."""


class PairingError(RankalignError):
    """Raised when a usable pair set cannot be built."""


class EmptyPairSetError(PairingError):
    """Raised when thresholding leaves no distinct-rating pairs."""


class SolverInputError(RankalignError):
    """Raised when solver inputs are malformed (non-finite, bad labels)."""


class MetricError(RankalignError):
    """Raised when a metric is undefined for the given inputs."""
