"""Exception types shared across the pipeline stages."""


class NlsDirectError(Exception):
    """Base class for failures raised by this package."""


class StabilityError(NlsDirectError):
    """A recursion would divide by a non-positive stability factor.

    Refining the grid (smaller h) is the usual remedy.
    """


class RankError(NlsDirectError):
    """A Hankel matrix is numerically rank deficient for the requested order."""


class SpectralSingularityError(NlsDirectError):
    """A scattering denominator vanishes at a real spectral abscissa."""
