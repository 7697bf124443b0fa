"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input violates an operation's stated domain (non-unit vector, bad shape, ...)."""


class DegenerateInputError(DomainError):
    """Inputs are too close to a configuration where the construction is undefined
    (near-parallel unit vectors, rank-deficient frames)."""


class CutLocusError(ValueError):
    """The two points are at (or numerically indistinguishable from) each other's cut locus."""


class ConjugatePointError(ValueError):
    """Geodesic length at or beyond the first conjugate point on the sphere."""


class InfeasibleRateError(ValueError):
    """No rotation angle realizes the requested contraction rate at the current
    distance (|cos alpha| would exceed 1)."""


class StepTooLargeError(ValueError):
    """A single random-walk step would travel a quarter great circle or more."""


class CouplingConstraintError(ValueError):
    """The composed-driver matrices fail J J' + K K' = I."""
