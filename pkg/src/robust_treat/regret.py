"""Regret functionals under the two-point prior class.

The prior class fixes the marginal of mu at 1/2-1/2 on {mu_bar, -mu_bar} and
leaves the conditional law of the welfare contrast U free within the
identified set. Bayes regret is linear in that conditional law, and expected
regret is convex in U, so every supremum over the class is attained by a
conditional law on the two endpoints of the identified set. That is why a
member of the class is stored as just two masses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DomainError
from .model import ProblemSpec, bounds_at, efficient_index
from .rules import DecisionRule, acceptance_probability


@dataclass(frozen=True)
class GammaPrior:
    """Endpoint-supported prior in the class.

    q_plus is the mass on U = upper(mu_bar) given mu = mu_bar (the rest sits on
    lower(mu_bar)); q_minus is the same for mu = -mu_bar.
    """

    q_plus: float
    q_minus: float

    def __post_init__(self):
        for name in ("q_plus", "q_minus"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")

    def to_dict(self) -> dict[str, float]:
        return {"q_plus": self.q_plus, "q_minus": self.q_minus}


@dataclass(frozen=True)
class PosteriorWeight:
    """Posterior probability that mu = mu_bar given Y."""

    p_plus: float


def _loss(u, a):
    """Regret of action a when the welfare contrast is u: u (1{u >= 0} - a)."""
    u = np.asarray(u, dtype=float)
    return u * (np.where(u >= 0.0, 1.0, 0.0) - a)


def expected_regret(rule: DecisionRule, mu, u: float, Sigma) -> float:
    """u (1{u >= 0} - E_mu[d(Y)]) for a state with reduced form mu and contrast u."""
    e = acceptance_probability(rule, mu, Sigma).value
    return float(_loss(u, e))


def _endpoint_acceptances(rule: DecisionRule, spec: ProblemSpec) -> tuple[float, float]:
    e_plus = acceptance_probability(rule, spec.mu_bar, spec.Sigma).value
    e_minus = acceptance_probability(rule, -spec.mu_bar, spec.Sigma).value
    return e_plus, e_minus


def bayes_regret_from_acceptance(e_plus: float, e_minus: float, prior: GammaPrior, spec: ProblemSpec) -> float:
    bp, bm = bounds_at(spec, spec.mu_bar), bounds_at(spec, -spec.mu_bar)
    at_plus = prior.q_plus * _loss(bp.upper, e_plus) + (1 - prior.q_plus) * _loss(bp.lower, e_plus)
    at_minus = prior.q_minus * _loss(bm.upper, e_minus) + (1 - prior.q_minus) * _loss(bm.lower, e_minus)
    return float(0.5 * at_plus + 0.5 * at_minus)


def bayes_regret(rule: DecisionRule, prior: GammaPrior, spec: ProblemSpec) -> float:
    """Bayes expected regret r(d, pi) of ``rule`` under an endpoint prior."""
    return bayes_regret_from_acceptance(*_endpoint_acceptances(rule, spec), prior, spec)


def worst_case_from_acceptance(e_plus: float, e_minus: float, spec: ProblemSpec) -> tuple[float, GammaPrior]:
    """sup over the prior class as a function of (E_{mu_bar}[d], E_{-mu_bar}[d])."""
    bp, bm = bounds_at(spec, spec.mu_bar), bounds_at(spec, -spec.mu_bar)
    up_p, lo_p = float(_loss(bp.upper, e_plus)), float(_loss(bp.lower, e_plus))
    up_m, lo_m = float(_loss(bm.upper, e_minus)), float(_loss(bm.lower, e_minus))
    prior = GammaPrior(q_plus=1.0 if up_p >= lo_p else 0.0, q_minus=1.0 if up_m >= lo_m else 0.0)
    return 0.5 * max(up_p, lo_p) + 0.5 * max(up_m, lo_m), prior


def worst_case_bayes_regret(rule: DecisionRule, spec: ProblemSpec) -> tuple[float, GammaPrior]:
    """Largest Bayes regret over the prior class and an endpoint prior attaining it.

    Ties between the two endpoints are broken toward the upper endpoint (q = 1).
    """
    return worst_case_from_acceptance(*_endpoint_acceptances(rule, spec), spec)


def posterior_weight(Y, spec: ProblemSpec) -> PosteriorWeight:
    """Posterior of mu = mu_bar under the uniform two-point marginal: logistic(2 w'Y)."""
    w = efficient_index(spec).w
    t = float(np.atleast_1d(np.asarray(Y, dtype=float)) @ w)
    return PosteriorWeight(float(expit(2.0 * t)))


def posterior_gamma_objective(a, Y, spec: ProblemSpec):
    """Worst-case posterior expected regret of action(s) ``a`` after observing Y.

    Uses posterior weights rather than raw likelihoods; the two differ by a
    positive factor that does not depend on ``a``.
    """
    p = posterior_weight(Y, spec).p_plus
    bp, bm = bounds_at(spec, spec.mu_bar), bounds_at(spec, -spec.mu_bar)
    a_arr = np.asarray(a, dtype=float)
    v_plus = np.maximum(_loss(bp.upper, a_arr), _loss(bp.lower, a_arr))
    v_minus = np.maximum(_loss(bm.upper, a_arr), _loss(bm.lower, a_arr))
    out = p * v_plus + (1.0 - p) * v_minus
    return float(out) if out.ndim == 0 else out


def profiled_regret(rule: DecisionRule, mu: float, spec: ProblemSpec) -> float:
    """Worst expected regret over the identified set [mu - k, mu + k] in the scalar model."""
    if spec.model != "stoye" or spec.n != 1:
        raise DomainError("profiled regret is only defined for the scalar external-validity model")
    k = spec.params["k"]
    mu = float(mu)
    e = acceptance_probability(rule, [mu], spec.Sigma).value
    if mu < -k:
        return (-mu + k) * e
    if mu > k:
        return (mu + k) * (1.0 - e)
    return max((mu + k) * (1.0 - e), (-mu + k) * e)
