"""
Exception hierarchy shared by every laboratory module.
"""


class LabError(Exception):
    """Base class for all laboratory errors."""


# Lattice
class EmptyLattice(LabError, ValueError):
    """The discretized domain has no interior site."""


class InvalidPolygon(LabError, ValueError):
    """The domain polygon is degenerate or self-intersecting."""


class AnnulusOutsideDomain(LabError, ValueError):
    """The side-3 annulus around a block leaves the unit square."""


# Disorder and fields
class NonPositiveLambda(LabError, ValueError):
    """A chaos normalization divides by lambda but inf lambda <= 0."""


class NonGaussianLaw(LabError, ValueError):
    """An operation that needs Gaussian disorder got another law."""


# Exact backends and sampling
class TooLarge(LabError, ValueError):
    """The lattice exceeds the enumeration or expansion cap."""


class TooWide(LabError, ValueError):
    """The strip exceeds the transfer-matrix width cap."""


class WolffWithField(LabError, ValueError):
    """The cluster algorithm was requested with a nonzero site field."""


class ZeroDenominator(LabError, ArithmeticError):
    """A partition-function ratio has a vanishing denominator."""


# Chaos
class MissingCorrelation(LabError, KeyError):
    """A correlation needed by a kernel coefficient is absent."""


class DegreeExceeded(LabError, ValueError):
    """A truncation degree exceeds the degree cap of the kernel."""


# Besov
class InsufficientRegularity(LabError, ValueError):
    """The wavelet family is not regular enough for the requested alpha."""


class DimensionTooLarge(LabError, ValueError):
    """The boundary box dimension is not below 2 + alpha."""


# Singularity and moments
class EmptySamples(LabError, ValueError):
    """An estimator received no samples."""


class ZeroBlockMass(LabError, ValueError):
    """A block contains no lattice site."""


class InsufficientTail(LabError, RuntimeError):
    """Too few samples fall in the left tail to fit its decay."""
