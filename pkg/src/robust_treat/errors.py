"""Exception hierarchy shared by all modules."""


class RobustTreatError(Exception):
    """Base class for every error raised by the package."""


class DomainError(RobustTreatError, ValueError):
    """An argument lies outside the domain of the operation."""


class SpecError(RobustTreatError, ValueError):
    """A problem specification violates one of its invariants."""


class DegenerateSpecError(SpecError):
    """The prior location is zero, so the efficient index vanishes."""


class InfeasibleSpecError(SpecError):
    """The identified set is empty (lower bound above upper bound)."""


class KnifeEdgeError(SpecError):
    """Upper plus lower bound is zero at the prior location; no normalization exists."""


class LinearAlgebraError(RobustTreatError):
    """Cholesky factorization or an SPD solve failed."""


class RegimeError(RobustTreatError, ValueError):
    """A regime-specific constant was requested in the wrong regime."""


class NumericError(RobustTreatError, ArithmeticError):
    """A numerical routine (root bracketing, quadrature) failed."""
