"""Exception types shared across the package."""


class GspFilterError(Exception):
    """Base class for errors raised by this package."""


class InfeasibleSamplingError(GspFilterError):
    """Requested sample count is too small for the active frequency band."""


class SingularSamplingError(GspFilterError):
    """The sampled band matrix is singular; no normalization exists."""


class SingularNormalizationError(GspFilterError):
    """The per-step normalization matrix is singular even after ridging."""


class InfiniteMomentError(GspFilterError):
    """A requested fractional moment does not exist for the noise model."""


class StabilityViolationError(GspFilterError):
    """Step size violates the steady-state contraction condition."""


class DegenerateSystemError(GspFilterError):
    """System matrices collapse (zero spectral radius or empty operators)."""


class IngestError(GspFilterError):
    """Input data files are malformed or mutually inconsistent."""


class ExperimentError(GspFilterError):
    """A Monte Carlo experiment could not produce a usable result."""
