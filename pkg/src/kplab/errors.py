"""Exception types shared across the package."""


class KplabError(Exception):
    """Base class for all package-specific failures."""


class NonPositiveCurvature(KplabError):
    """Boundary curvature is not strictly positive somewhere."""


class DomainInvalid(KplabError):
    """Spectral domain violates one of its admissibility conditions."""


class NonUniqueMinimizer(KplabError):
    """Two distinct boundary minimizers of the phase are numerically tied."""


class DegenerateFrame(KplabError):
    """Minimizer frame violates a nondegeneracy hypothesis (quad_coeff <= 0
    or vanishing phase gradient)."""


class TimeZero(KplabError):
    """t = 0 requested where y/t is needed and no explicit ratio was given."""


class IllConditioned(KplabError):
    """Linear system too ill-conditioned to certify the solution."""


class RealityViolated(KplabError):
    """A quantity that must be real carries a non-negligible imaginary part."""


class SingularDN(KplabError):
    """Denominator determinant of the reduced system vanished numerically."""


class BadEpsilon(KplabError):
    """Interval-covering exponent outside the admissible range (0, 1/4)."""


class StepTooLarge(KplabError):
    """Finite-difference step too coarse for the local solution width."""


class AxisMismatch(KplabError):
    """Field grids to be compared do not share axes."""


class ConfigError(KplabError):
    """Run configuration file is malformed or violates an invariant."""
