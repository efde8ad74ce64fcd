"""Ex-ante robust Bayes (Gamma-minimax regret) rules.

Two regimes, split by comparing the identification ratio
``r = upper / (upper - lower)`` (bounds at mu_bar) with ``Phi(||w||_Sigma)``:

* ``r >= Phi(||w||)``: the threshold rule 1{w'Y >= 0} is the unique solution
  and the least favorable prior sits on two points.
* otherwise a rule is optimal iff ``E_{-mu_bar}[d] = 1 - r`` and
  ``E_{mu_bar}[d] = r``. The probit, clamped-linear and two-step rules below
  (and, when n > 1, two purified threshold rules) all meet these conditions;
  the least favorable prior sits on four points and makes the data useless.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize

from .errors import DomainError, NumericError, RegimeError
from .gauss import gauss_antiderivative, std_normal_cdf, std_normal_quantile
from .model import ProblemSpec, Regime, bounds_at, classify_regime, efficient_index
from .regret import GammaPrior, bayes_regret, worst_case_bayes_regret
from .rules import (
    ClampedLinear,
    DecisionRule,
    Probit,
    Threshold,
    TwoStep,
    acceptance_probability,
    rule_to_dict,
)

logger = logging.getLogger(__name__)

CLOSED_FORM_TOL = 1e-10
QUADRATURE_TOL = 1e-8
RHO_LOWER = 1e-8


@dataclass(frozen=True)
class Certificate:
    """Outcome of one numerical check; a failed check is data, not an exception."""

    label: str
    check: str
    passed: bool
    residual: float
    tol: float
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"label": self.label, "check": self.check, "passed": self.passed,
                "residual": self.residual, "tol": self.tol, "detail": self.detail}


@dataclass(frozen=True)
class LfpRecord:
    kind: str
    prior: GammaPrior
    support: tuple[dict[str, float], ...]

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "prior": self.prior.to_dict(), "support": list(self.support)}


@dataclass(frozen=True)
class MmrSolution:
    regime: Regime
    rules: tuple[tuple[str, DecisionRule], ...]
    value: float
    lfp: LfpRecord
    certificates: tuple[Certificate, ...]
    threshold_rules: tuple[tuple[str, DecisionRule], ...] = ()
    constants: dict[str, Any] = field(default_factory=dict)

    def rule(self, label: str) -> DecisionRule:
        for name, r in self.rules + self.threshold_rules:
            if name == label:
                return r
        raise KeyError(label)

    @property
    def verified(self) -> bool:
        return all(c.passed for c in self.certificates)

    def to_dict(self) -> dict[str, Any]:
        return {
            "regime": self.regime.tag,
            "ratio": self.regime.ratio,
            "phi_norm": self.regime.phi_norm,
            "value": self.value,
            "rules": [{"label": k, "rule": rule_to_dict(r)} for k, r in self.rules],
            "threshold_rules": [{"label": k, "rule": rule_to_dict(r)} for k, r in self.threshold_rules],
            "lfp": self.lfp.to_dict(),
            "constants": self.constants,
            "certificates": [c.to_dict() for c in self.certificates],
        }


def _case_two(spec: ProblemSpec) -> tuple[Regime, float, float]:
    reg = classify_regime(spec)
    if reg.tag != "CaseII":
        raise RegimeError(
            f"constant only defined when ratio < Phi(||w||); got ratio={reg.ratio:.6g}, "
            f"Phi(||w||)={reg.phi_norm:.6g}"
        )
    return reg, reg.ratio, efficient_index(spec).norm


def moment_targets(spec: ProblemSpec) -> tuple[float, float]:
    """Required (E_{-mu_bar}[d], E_{mu_bar}[d]) for optimality in the second regime."""
    b = bounds_at(spec, spec.mu_bar)
    width = b.upper - b.lower
    if width == 0:
        return 0.0, 1.0
    return -b.lower / width, b.upper / width


def minimax_value(spec: ProblemSpec) -> float:
    b = bounds_at(spec, spec.mu_bar)
    reg = classify_regime(spec)
    if reg.tag == "CaseI":
        return b.upper * std_normal_cdf(-efficient_index(spec).norm)
    return -b.upper * b.lower / (b.upper - b.lower)


def sigma_tilde(spec: ProblemSpec) -> float:
    """Scale of the probit rule whose acceptance at mu_bar equals the ratio."""
    _, r, nrm = _case_two(spec)
    q = std_normal_quantile(r)
    return float(np.sqrt((nrm * nrm / q) ** 2 - nrm * nrm))


def linear_acceptance(rho, norm: float):
    """E_{mu_bar} of the clamped-linear rule with half-width rho, in closed form.

    1 - (||w|| / 2 rho) [G((rho - ||w||^2)/||w||) - G((-rho - ||w||^2)/||w||)],
    with G the antiderivative of Phi.
    """
    rho = np.asarray(rho, dtype=float)
    n2 = norm * norm
    diff = gauss_antiderivative((rho - n2) / norm) - gauss_antiderivative((-rho - n2) / norm)
    return 1.0 - norm / (2.0 * rho) * diff


def rho_star(spec: ProblemSpec) -> float:
    """Half-width of the clamped-linear rule meeting the moment conditions.

    The acceptance at mu_bar falls strictly from Phi(||w||) to 1/2 as rho grows,
    so the root is bracketed and unique. The upper seed comes from the
    large-rho asymptote (rho + ||w||^2) / (2 rho).
    """
    _, r, nrm = _case_two(spec)

    def gap(rho: float) -> float:
        return float(linear_acceptance(rho, nrm)) - r

    lo, hi = RHO_LOWER, 2.0 * nrm * nrm / (2.0 * r - 1.0)
    if not gap(lo) > 0:
        raise NumericError(f"rho bracket: f({lo})-target={gap(lo):.3g} is not positive")
    for _ in range(200):
        if gap(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NumericError(f"rho bracket: no sign change up to rho={hi:.3g}; f-target={gap(hi):.3g}")
    root = optimize.brentq(gap, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(gap(root)) > CLOSED_FORM_TOL:
        raise NumericError(f"rho root residual {gap(root):.3g} on bracket [{lo}, {hi}]")
    return float(root)


def beta_star(spec: ProblemSpec) -> float:
    """Half-gap of the two-step rule meeting the moment conditions, in (0, 1/2)."""
    _, r, nrm = _case_two(spec)
    return float((r - 0.5) / (2.0 * std_normal_cdf(nrm) - 1.0))


def c_star(spec: ProblemSpec) -> float:
    """Best positive cutoff among rules 1{w'Y >= c}: ||w||^2 - ||w|| Phi^{-1}(r)."""
    _, r, nrm = _case_two(spec)
    return float(nrm * nrm - nrm * std_normal_quantile(r))


def threshold_worst_case(c, spec: ProblemSpec) -> float:
    """Worst-case Bayes regret of 1{w'Y >= c} in the w-direction."""
    w = efficient_index(spec).w
    return worst_case_bayes_regret(Threshold(w, c), spec)[0]


def default_mu_dot(spec: ProblemSpec) -> np.ndarray:
    """First standard basis vector not parallel to mu_bar, made orthogonal to w."""
    idx = efficient_index(spec)
    scale = float(np.max(np.abs(spec.mu_bar)))
    for i in range(spec.n):
        e = np.zeros(spec.n)
        e[i] = 1.0
        cand = e - (idx.w[i] / idx.norm ** 2) * spec.mu_bar
        if np.linalg.norm(cand) > 1e-8 * max(1.0, scale):
            return cand
    raise DomainError("no direction orthogonal to w exists (n must exceed 1)")


@dataclass(frozen=True)
class PurifiedRoot:
    """One root t of the mixing-weight equation and the threshold rule it yields.

    ``oriented`` is True when the raw index w_t had w_t'mu_bar < 0 and was
    negated so that the rule accepts more often at mu_bar than at -mu_bar.
    """

    t: float
    s_star: float
    rule: Threshold
    oriented: bool


def t_star(spec: ProblemSpec, mu_dot=None) -> tuple[PurifiedRoot, PurifiedRoot]:
    """Both roots t of the purification equation, with their threshold rules.

    The rule uses w_t = Sigma^{-1}(t mu_bar + (1 - t) mu_dot) where mu_dot is
    Sigma^{-1}-orthogonal to mu_bar. The equation only pins down
    (w_t'mu_bar)^2 / (w_t'Sigma w_t), so for the negative root w_t points away
    from mu_bar; that root's index is negated to recover a valid rule.
    """
    if spec.n < 2:
        raise DomainError("purified threshold rules need a signal of dimension n > 1")
    _, r, nrm = _case_two(spec)
    idx = efficient_index(spec)
    if mu_dot is None:
        mu_dot = default_mu_dot(spec)
    mu_dot = np.asarray(mu_dot, dtype=float).reshape(-1)
    if mu_dot.size != spec.n or not np.any(mu_dot != 0):
        raise DomainError("mu_dot must be a nonzero vector of dimension n")
    inner = float(mu_dot @ idx.w)
    if abs(inner) > CLOSED_FORM_TOL * max(1.0, np.linalg.norm(mu_dot) * np.linalg.norm(idx.w)):
        raise DomainError(f"mu_dot must satisfy mu_dot' Sigma^-1 mu_bar = 0, got {inner:.3g}")
    sinv_dot = np.linalg.solve(spec.Sigma, mu_dot)
    dot_norm_sq = float(mu_dot @ sinv_dot)
    s = std_normal_quantile(r) ** 2 / nrm ** 2
    root = np.sqrt((1.0 - s) / s * nrm ** 2 / dot_norm_sq)
    out = []
    for t in (1.0 / (1.0 + root), 1.0 / (1.0 - root)):
        w_t = t * idx.w + (1.0 - t) * sinv_dot
        flip = float(w_t @ spec.mu_bar) < 0
        out.append(PurifiedRoot(t=float(t), s_star=float(s), rule=Threshold(-w_t if flip else w_t, 0.0),
                                oriented=flip))
    return out[0], out[1]


@dataclass(frozen=True)
class MomentCertificate:
    passed: bool
    e_minus: float
    e_plus: float
    target_minus: float
    target_plus: float
    residual_minus: float
    residual_plus: float
    tol: float
    method: str

    @property
    def residual(self) -> float:
        return max(self.residual_minus, self.residual_plus)

    def to_dict(self) -> dict[str, Any]:
        return dict(vars(self))


def verify_moment_conditions(rule: DecisionRule, spec: ProblemSpec, tol: float = QUADRATURE_TOL) -> MomentCertificate:
    """Check E_{-mu_bar}[d] = -lower/(upper-lower) and E_{mu_bar}[d] = upper/(upper-lower)."""
    tm, tp = moment_targets(spec)
    ap = acceptance_probability(rule, spec.mu_bar, spec.Sigma)
    am = acceptance_probability(rule, -spec.mu_bar, spec.Sigma)
    rm, rp = abs(am.value - tm), abs(ap.value - tp)
    method = "quadrature" if "quadrature" in (ap.method, am.method) else "closed_form"
    return MomentCertificate(passed=bool(rm <= tol and rp <= tol), e_minus=am.value, e_plus=ap.value,
                             target_minus=tm, target_plus=tp, residual_minus=rm, residual_plus=rp,
                             tol=tol, method=method)


def least_favorable_prior(spec: ProblemSpec) -> LfpRecord:
    bp, bm = bounds_at(spec, spec.mu_bar), bounds_at(spec, -spec.mu_bar)
    if classify_regime(spec).tag == "CaseI":
        prior = GammaPrior(q_plus=1.0, q_minus=0.0)
        support = ({"mu_sign": 1.0, "u": bp.upper, "mass": 0.5},
                   {"mu_sign": -1.0, "u": bm.lower, "mass": 0.5})
        return LfpRecord("two_point", prior, support)
    # masses that make the conditional mean of U zero at each reduced form
    p1 = -bp.lower / (bp.upper - bp.lower)
    p2 = -bm.lower / (bm.upper - bm.lower)
    prior = GammaPrior(q_plus=p1, q_minus=p2)
    support = ({"mu_sign": 1.0, "u": bp.upper, "mass": 0.5 * p1},
               {"mu_sign": 1.0, "u": bp.lower, "mass": 0.5 * (1 - p1)},
               {"mu_sign": -1.0, "u": bm.upper, "mass": 0.5 * p2},
               {"mu_sign": -1.0, "u": bm.lower, "mass": 0.5 * (1 - p2)})
    return LfpRecord("four_point", prior, support)


def _tol_for(rule: DecisionRule, spec: ProblemSpec) -> float:
    method = acceptance_probability(rule, spec.mu_bar, spec.Sigma).method
    return CLOSED_FORM_TOL if method == "closed_form" else QUADRATURE_TOL


def solve_mmr(spec: ProblemSpec, mu_dot=None) -> MmrSolution:
    """Regime, optimal rules, minimax value, least favorable prior and certificates."""
    reg = classify_regime(spec)
    idx = efficient_index(spec)
    value = minimax_value(spec)
    lfp = least_favorable_prior(spec)
    certs: list[Certificate] = []

    if reg.tag == "CaseI":
        d0 = Threshold(idx.w, 0.0)
        worst, _ = worst_case_bayes_regret(d0, spec)
        at_lfp = bayes_regret(d0, lfp.prior, spec)
        certs.append(Certificate("w0", "saddle_point", abs(worst - at_lfp) <= CLOSED_FORM_TOL,
                                 abs(worst - at_lfp), CLOSED_FORM_TOL,
                                 {"worst_case": worst, "bayes_at_lfp": at_lfp}))
        certs.append(Certificate("w0", "minimax_value", abs(worst - value) <= CLOSED_FORM_TOL,
                                 abs(worst - value), CLOSED_FORM_TOL, {"worst_case": worst, "value": value}))
        return MmrSolution(reg, (("w0", d0),), value, lfp, tuple(certs), constants={"norm": idx.norm})

    st, rs, bs, cs = sigma_tilde(spec), rho_star(spec), beta_star(spec), c_star(spec)
    rules: list[tuple[str, DecisionRule]] = [
        ("rt", Probit(idx.w, st)),
        ("linear", ClampedLinear(idx.w, rs)),
        ("step", TwoStep(idx.w, 0.5 - bs, 0.5 + bs)),
    ]
    constants: dict[str, Any] = {"norm": idx.norm, "sigma_tilde": st, "rho_star": rs,
                                 "beta_star": bs, "c_star": cs}
    if spec.n > 1:
        plus, minus = t_star(spec, mu_dot)
        rules += [("t_plus", plus.rule), ("t_minus", minus.rule)]
        constants.update({"s_star": plus.s_star, "t_star": [plus.t, minus.t]})
    for label, rule in rules:
        tol = _tol_for(rule, spec)
        mc = verify_moment_conditions(rule, spec, tol)
        certs.append(Certificate(label, "moment_conditions", mc.passed, mc.residual, tol, mc.to_dict()))
        worst, _ = worst_case_bayes_regret(rule, spec)
        vtol = tol * max(1.0, abs(value))
        certs.append(Certificate(label, "minimax_value", abs(worst - value) <= vtol, abs(worst - value), vtol,
                                 {"worst_case": worst, "value": value}))
    thresholds = (("threshold_plus", Threshold(idx.w, cs)), ("threshold_minus", Threshold(idx.w, -cs)))
    for label, rule in thresholds:
        g = threshold_worst_case(rule.c, spec)
        certs.append(Certificate(label, "threshold_gap_positive", g > value, g - value, 0.0,
                                 {"worst_case": g, "value": value}))
    sol = MmrSolution(reg, tuple(rules), value, lfp, tuple(certs), thresholds, constants)
    if not sol.verified:
        logger.warning("some certificates failed for %s", spec.label)
    return sol


def stoye_case_one(mu_bar: float, sigma: float, k: float) -> bool:
    """Regime test written directly in the scalar model's parameters."""
    if k == 0:
        return True
    return (mu_bar + k) / (2.0 * k) >= std_normal_cdf(mu_bar / sigma)
