"""Exception taxonomy shared across the package."""


class HeckeWeylError(Exception):
    """Base class for all package errors."""


class SingularParameter(HeckeWeylError):
    """A spectral parameter lies on a root hyperplane where it must not."""


class NonConvergent(HeckeWeylError):
    """Degenerate-point extrapolation failed to stabilise."""


class NearSingular(HeckeWeylError):
    """Matrix too ill-conditioned for a reliable decomposition."""


class PreconditionViolated(HeckeWeylError):
    """An analytic precondition (e.g. a root vanishing on X) fails."""


class SingularMatrix(HeckeWeylError):
    """Matrix is not invertible."""


class ScaleExceeded(HeckeWeylError):
    """Requested computation exceeds the documented desk-scale limits."""


class DivisibilityViolation(HeckeWeylError):
    """Exact divisibility expected by the algebra failed; signals a bug."""


class Unstable(HeckeWeylError):
    """Residue-level computation did not stabilise; raise the level m."""


class TailTooLarge(HeckeWeylError):
    """Certified tail bound of a truncated integral exceeds the budget."""


class TruncationTooCoarse(HeckeWeylError):
    """Quadrature truncation boundary contributes more than tolerated."""


class RootPrecisionLoss(HeckeWeylError):
    """Numeric root clusters are ambiguous after exact multiplicity split."""


class BadPlace(HeckeWeylError):
    """The chosen prime is ramified or otherwise unusable."""


class FactorizationTooLarge(HeckeWeylError):
    """Integer factorization beyond the desk-scale trial-division bound."""


class ConfigInvalid(HeckeWeylError):
    """Experiment configuration does not parse or misses required keys."""
