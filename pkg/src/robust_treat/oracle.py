"""Brute-force checks that do not rely on the closed forms they are used to test.

* :func:`brute_force_minimax` solves the ex-ante problem over rules that are
  piecewise constant in ``t = w'Y``. Worst-case Bayes regret depends on a rule
  only through its acceptance probabilities at +-mu_bar, which are linear in the
  bin values, so the problem over a fixed set of bins is a small linear program.
  The LP optimum is then projected onto the discrete action levels and polished
  by coordinate descent.
* :func:`brute_force_per` minimizes the posterior objective over an action grid.
* :func:`dominance_scan` compares profiled regret curves in the scalar model.
* :func:`equilibrium_audit` checks the saddle point around a solution.
* :func:`verify_suite` runs every check on one spec and collects a report.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, replace
from typing import Any

import numpy as np
from scipy import optimize

from .errors import DomainError, NumericError, SpecError
from .gauss import TAIL_SD, std_normal_cdf
from .model import ProblemSpec, bounds_at, efficient_index
from .regret import (
    GammaPrior,
    _loss,
    bayes_regret,
    posterior_gamma_objective,
    profiled_regret,
    worst_case_bayes_regret,
)
from .rules import (
    ClampedLinear,
    Constant,
    DecisionRule,
    Mixture,
    Probit,
    Tabulated,
    Threshold,
    TwoStep,
    acceptance_probability,
    evaluate,
    is_symmetric,
    mc_acceptance,
)
from .solver_mmr import (
    CLOSED_FORM_TOL,
    QUADRATURE_TOL,
    Certificate,
    MmrSolution,
    solve_mmr,
    threshold_worst_case,
    verify_moment_conditions,
)
from .solver_per import agreement_by_rule_identity, classify_agreement, solve_per

CAUCHY_TOL = 1e-3


# ---------------------------------------------------------------- minimax over tabulated rules

@dataclass(frozen=True)
class MinimaxGrid:
    index_knots: tuple[float, ...]
    action_levels: tuple[float, ...]
    prior_grid: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not (self.index_knots and self.action_levels and self.prior_grid):
            raise DomainError("grids must be nonempty")
        if any(b <= a for a, b in zip(self.index_knots, self.index_knots[1:])):
            raise DomainError("index knots must be strictly increasing")
        corners = {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)}
        if not corners <= set(self.prior_grid):
            raise DomainError("prior grid must contain the four corners of [0,1]^2")

    def refined(self) -> MinimaxGrid:
        """Insert every midpoint; the old bins are unions of new ones."""
        k = np.asarray(self.index_knots)
        fine = np.empty(2 * k.size - 1)
        fine[0::2] = k
        fine[1::2] = 0.5 * (k[:-1] + k[1:])
        return replace(self, index_knots=tuple(fine))


def default_grid(spec: ProblemSpec, knots: int = 400, levels: int = 21, prior_points: int = 11) -> MinimaxGrid:
    """Uniform knots covering mean +- TAIL_SD sd of w'Y under both +-mu_bar, plus 0."""
    nrm = efficient_index(spec).norm
    half = nrm * nrm + TAIL_SD * nrm
    k = np.union1d(np.linspace(-half, half, knots), [0.0])
    q = np.linspace(0.0, 1.0, prior_points)
    priors = tuple((float(a), float(b)) for a in q for b in q)
    return MinimaxGrid(tuple(k), tuple(np.linspace(0.0, 1.0, levels)), priors)


def _bin_masses(spec: ProblemSpec, knots: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    nrm = efficient_index(spec).norm
    edges = np.concatenate(([-np.inf], knots, [np.inf]))
    out = []
    for m in (nrm * nrm, -nrm * nrm):
        z = np.clip((edges - m) / nrm, -40.0, 40.0)
        out.append(np.diff(std_normal_cdf(z)))
    return out[0], out[1]


def _endpoint_losses(spec: ProblemSpec) -> tuple[tuple[float, float], tuple[float, float]]:
    bp, bm = bounds_at(spec, spec.mu_bar), bounds_at(spec, -spec.mu_bar)
    return (bp.upper, bp.lower), (bm.upper, bm.lower)


def _sup_over_grid(e_plus, e_minus, spec: ProblemSpec, priors) -> np.ndarray:
    """Bayes regret maximized over the prior grid; vectorized over e_plus/e_minus."""
    (up, lp), (um, lm) = _endpoint_losses(spec)
    q = np.asarray(priors)
    qp, qm = q[:, 0][:, None], q[:, 1][:, None]
    ep, em = np.atleast_1d(e_plus)[None, :], np.atleast_1d(e_minus)[None, :]
    vals = 0.5 * (qp * _loss(up, ep) + (1 - qp) * _loss(lp, ep)) + 0.5 * (qm * _loss(um, em) + (1 - qm) * _loss(lm, em))
    return vals.max(axis=0)


def _lp_minimax(spec: ProblemSpec, pp: np.ndarray, pm: np.ndarray) -> tuple[float, np.ndarray]:
    """min over bin values v in [0,1] of 1/2 z1 + 1/2 z2 with z1, z2 above each endpoint loss."""
    (up, lp), (um, lm) = _endpoint_losses(spec)
    nb = pp.size
    cost = np.zeros(nb + 2)
    cost[-2:] = 0.5
    rows, rhs = [], []
    # loss(u, E) = u 1{u >= 0} - u E, and E = P.v
    for u in (up, lp):
        rows.append(np.concatenate((-u * pp, [-1.0, 0.0])))
        rhs.append(-u * (u >= 0))
    for u in (um, lm):
        rows.append(np.concatenate((-u * pm, [0.0, -1.0])))
        rhs.append(-u * (u >= 0))
    bounds = [(0.0, 1.0)] * nb + [(None, None)] * 2
    res = optimize.linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if res.status != 0:
        raise NumericError(f"minimax LP failed: {res.message}")
    return float(res.fun), np.clip(res.x[:nb], 0.0, 1.0)


def _polish(v: np.ndarray, levels: np.ndarray, pp: np.ndarray, pm: np.ndarray, spec: ProblemSpec,
            priors, max_moves: int = 20000) -> tuple[float, np.ndarray]:
    """Greedy coordinate descent over bin values restricted to ``levels``."""
    v = v.copy()
    ep, em = float(pp @ v), float(pm @ v)
    best = float(_sup_over_grid(ep, em, spec, priors)[0])
    for _ in range(max_moves):
        delta = levels[None, :] - v[:, None]
        cand_p = (ep + pp[:, None] * delta).ravel()
        cand_m = (em + pm[:, None] * delta).ravel()
        vals = _sup_over_grid(cand_p, cand_m, spec, priors)
        j = int(np.argmin(vals))
        if vals[j] >= best - 1e-15:
            break
        b, l = divmod(j, levels.size)
        v[b] = levels[l]
        ep, em = float(pp @ v), float(pm @ v)
        best = float(_sup_over_grid(ep, em, spec, priors)[0])
    return best, v


@dataclass(frozen=True)
class MinimaxResult:
    """Outcome of the brute-force search; unpacks as ``(value, rule)``."""

    value: float
    rule: Tabulated
    lp_value: float
    refined_value: float
    refined_lp_value: float
    cauchy_gap: float
    converged: bool
    knots: int
    levels: int

    def __iter__(self) -> Iterator[Any]:
        return iter((self.value, self.rule))

    def to_dict(self) -> dict[str, Any]:
        out = {k: v for k, v in vars(self).items() if k != "rule"}
        out["flag"] = None if self.converged else "grid too coarse: value not Cauchy under refinement"
        return out


def _solve_on_grid(spec, grid: MinimaxGrid, warm: np.ndarray | None = None):
    knots = np.asarray(grid.index_knots)
    levels = np.asarray(grid.action_levels)
    pp, pm = _bin_masses(spec, knots)
    lp_val, v = _lp_minimax(spec, pp, pm)
    start = levels[np.abs(v[:, None] - levels[None, :]).argmin(axis=1)]
    val, v = _polish(start, levels, pp, pm, spec, grid.prior_grid)
    if warm is not None:
        val_w, v_w = _polish(warm, levels, pp, pm, spec, grid.prior_grid)
        if val_w < val:
            val, v = val_w, v_w
    return lp_val, val, v


def brute_force_minimax(spec: ProblemSpec, grid: MinimaxGrid | None = None, refine: bool = True) -> MinimaxResult:
    """Minimize worst-case Bayes regret over rules tabulated on ``grid``.

    With ``refine`` the search is repeated on the midpoint refinement, warm
    started from the coarse rule, so the refined value can only improve; the
    two values must agree to :data:`CAUCHY_TOL` or the result is flagged.
    """
    grid = grid or default_grid(spec)
    w = efficient_index(spec).w
    lp_val, val, v = _solve_on_grid(spec, grid)
    ref_val, ref_lp = val, lp_val
    if refine:
        fine = grid.refined()
        # each coarse bin i (between knots i-1 and i) splits into fine bins 2i-1 and 2i
        warm = np.empty(2 * v.size - 2)
        warm[0] = v[0]
        warm[-1] = v[-1]
        warm[1:-1] = np.repeat(v[1:-1], 2)
        ref_lp, ref_val, _ = _solve_on_grid(spec, fine, warm)
    gap = abs(val - ref_val)
    return MinimaxResult(value=val, rule=Tabulated(w, grid.index_knots, v), lp_value=lp_val,
                         refined_value=ref_val, refined_lp_value=ref_lp, cauchy_gap=gap,
                         converged=gap <= CAUCHY_TOL, knots=len(grid.index_knots), levels=len(grid.action_levels))


# ---------------------------------------------------------------- ex-post grid search

def brute_force_per(spec: ProblemSpec, Y, action_grid_size: int = 10001) -> float:
    """Smallest grid action minimizing the worst-case posterior regret at Y."""
    if action_grid_size < 2:
        raise DomainError("action grid needs at least two points")
    grid = np.linspace(0.0, 1.0, action_grid_size)
    vals = posterior_gamma_objective(grid, Y, spec)
    return float(grid[int(np.argmin(vals))])


# ---------------------------------------------------------------- profiled regret

@dataclass(frozen=True)
class DominanceReport:
    mu: tuple[float, ...]
    regret_a: tuple[float, ...]
    regret_b: tuple[float, ...]
    weak: bool
    strict_off_zero: bool
    all_equal: bool

    @property
    def dominates(self) -> bool:
        return self.weak and self.strict_off_zero

    def to_dict(self) -> dict[str, Any]:
        return {"weak": self.weak, "strict_off_zero": self.strict_off_zero, "all_equal": self.all_equal,
                "dominates": self.dominates, "min_gap_off_zero": self.min_gap_off_zero()}

    def min_gap_off_zero(self) -> float:
        d = np.asarray(self.regret_a) - np.asarray(self.regret_b)
        mask = np.asarray(self.mu) != 0.0
        return float(d[mask].min()) if mask.any() else 0.0

    def to_csv(self, label_a: str = "a", label_b: str = "b") -> str:
        return curves_to_csv("mu", self.mu, {f"value_{label_a}": self.regret_a, f"value_{label_b}": self.regret_b})


def dominance_scan(rule_a: DecisionRule, rule_b: DecisionRule, stoye_spec: ProblemSpec, mu_grid,
                   tol: float = 1e-12) -> DominanceReport:
    """Whether rule_a's profiled regret is at least rule_b's at every grid point, strictly off mu = 0."""
    mu = np.asarray(mu_grid, dtype=float)
    ra = np.array([profiled_regret(rule_a, m, stoye_spec) for m in mu])
    rb = np.array([profiled_regret(rule_b, m, stoye_spec) for m in mu])
    d = ra - rb
    off = mu != 0.0
    return DominanceReport(tuple(mu), tuple(ra), tuple(rb), weak=bool(np.all(d >= -tol)),
                           strict_off_zero=bool(np.all(d[off] > tol)), all_equal=bool(np.all(d == 0.0)))


def curves_to_csv(x_name: str, x, columns: dict[str, Sequence[float]]) -> str:
    """CSV text with a header row; floats written with repr so they round-trip."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    writer.writerow([x_name] + names)
    for i, xv in enumerate(x):
        writer.writerow([repr(float(xv))] + [repr(float(columns[n][i])) for n in names])
    return buf.getvalue()


# ---------------------------------------------------------------- saddle-point audit

def probe_rules(spec: ProblemSpec, count: int, seed: int = 0) -> list[DecisionRule]:
    """A deterministic mix of constant, threshold, two-step and random tabulated rules."""
    rng = np.random.Generator(np.random.PCG64(seed))
    w = efficient_index(spec).w
    nrm = efficient_index(spec).norm
    out: list[DecisionRule] = []
    for i in range(count):
        kind = i % 4
        if kind == 0:
            out.append(Constant(rng.uniform()))
        elif kind == 1:
            out.append(Threshold(w, rng.uniform(-3, 3) * nrm * max(nrm, 1.0)))
        elif kind == 2:
            a, b = sorted(rng.uniform(size=2))
            out.append(TwoStep(w, a, b))
        else:
            knots = np.sort(rng.normal(0.0, 2.0 * nrm * max(nrm, 1.0), size=6))
            out.append(Tabulated(w, knots, rng.uniform(size=7)))
    return out


@dataclass(frozen=True)
class AuditReport:
    checks: tuple[Certificate, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def equilibrium_audit(solution: MmrSolution, spec: ProblemSpec, probe_count: int = 64, seed: int = 0,
                      prior_points: int = 21) -> AuditReport:
    checks: list[Certificate] = []
    value = solution.value
    scale = max(1.0, abs(value))
    q = np.linspace(0.0, 1.0, prior_points)
    lfp = solution.lfp.prior
    for label, rule in solution.rules:
        tol = 1e-9 * scale
        worst, _ = worst_case_bayes_regret(rule, spec)
        checks.append(Certificate(label, "worst_case_equals_value", abs(worst - value) <= tol,
                                  abs(worst - value), tol, {"worst_case": worst}))
        at_lfp = bayes_regret(rule, lfp, spec)
        grid_max = max(bayes_regret(rule, GammaPrior(a, b), spec) for a in q for b in q)
        checks.append(Certificate(label, "lfp_maximizes_bayes_regret", grid_max <= at_lfp + tol,
                                  max(0.0, grid_max - at_lfp), tol, {"at_lfp": at_lfp, "grid_max": grid_max}))
    probes = probe_rules(spec, probe_count, seed)
    vals = np.array([bayes_regret(r, lfp, spec) for r in probes])
    if solution.regime.tag == "CaseII":
        spread = float(vals.max() - vals.min())
        checks.append(Certificate("probes", "lfp_bayes_regret_constant", spread <= CLOSED_FORM_TOL * scale,
                                  spread, CLOSED_FORM_TOL * scale, {"value": value, "count": len(probes)}))
    else:
        shortfall = float(max(0.0, value - vals.min()))
        checks.append(Certificate("probes", "rule_best_responds_to_lfp", shortfall <= CLOSED_FORM_TOL * scale,
                                  shortfall, CLOSED_FORM_TOL * scale, {"min_probe": float(vals.min())}))
    return AuditReport(tuple(checks))


# ---------------------------------------------------------------- end-to-end verification

def check_bound_symmetry(spec: ProblemSpec, count: int = 100, seed: int = 0, scale: float = 3.0) -> Certificate:
    """upper(-mu) = -lower(mu) at random mu."""
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for mu in rng.normal(0.0, scale, size=(count, spec.n)):
        try:
            b, r = bounds_at(spec, mu), bounds_at(spec, -mu)
        except SpecError:
            continue  # empty identified set at this mu
        worst = max(worst, abs(r.upper + b.lower), abs(r.lower + b.upper))
    return Certificate("bounds", "reflection", worst == 0.0, worst, 0.0, {"count": count})


def perturbed_rules(solution: MmrSolution, overrides: dict[str, float]) -> list[tuple[str, DecisionRule]]:
    """Optimal rules with constants shifted by the given amounts (negative controls)."""
    out = []
    for label, rule in solution.rules:
        if isinstance(rule, Probit) and "sigma_tilde" in overrides:
            rule = Probit(rule.w, rule.sigma_tilde + overrides["sigma_tilde"])
        elif isinstance(rule, ClampedLinear) and "rho_star" in overrides:
            rule = ClampedLinear(rule.w, rule.rho + overrides["rho_star"])
        elif isinstance(rule, TwoStep) and "beta_star" in overrides:
            d = overrides["beta_star"]
            rule = TwoStep(rule.w, rule.lo - d, rule.hi + d)
        out.append((label, rule))
    return out


@dataclass(frozen=True)
class VerifyReport:
    checks: tuple[Certificate, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def verify_suite(spec: ProblemSpec, seed: int = 0, overrides: dict[str, float] | None = None,
                 mc_draws: int = 1_000_000, minimax: bool = True) -> VerifyReport:
    """Run every available check on ``spec``; failures are recorded, never raised."""
    overrides = overrides or {}
    checks: list[Certificate] = [check_bound_symmetry(spec, seed=seed)]
    sol = solve_mmr(spec)
    checks += [c for c in sol.certificates if c.check != "moment_conditions"]
    rules = perturbed_rules(sol, overrides)

    if sol.regime.tag == "CaseII":
        mixture = Mixture([0.25] * 3 + [0.25], [r for _, r in rules[:3]] + [rules[0][1]])
        for label, rule in rules + [("mixture", mixture)]:
            ap = acceptance_probability(rule, spec.mu_bar, spec.Sigma)
            tol = CLOSED_FORM_TOL if ap.method == "closed_form" else QUADRATURE_TOL
            mc = verify_moment_conditions(rule, spec, tol)
            checks.append(Certificate(label, "moment_conditions", mc.passed, mc.residual, tol, mc.to_dict()))
            worst = 0.0
            for mu, target in ((spec.mu_bar, mc.target_plus), (-spec.mu_bar, mc.target_minus)):
                est, se = mc_acceptance(rule, mu, spec.Sigma, mc_draws, seed)
                worst = max(worst, abs(est - target) / max(se, 1e-300))
            checks.append(Certificate(label, "monte_carlo_moments", worst <= 4.0, worst, 4.0, {"draws": mc_draws}))
        cs = sol.constants["c_star"]
        grid = np.linspace(-3 * cs - 1.0, 3 * cs + 1.0, 2000)
        g = np.array([threshold_worst_case(c, spec) for c in grid])
        at = float(grid[int(np.argmin(g))])
        res = abs(abs(at) - cs)
        h = float(grid[1] - grid[0])
        checks.append(Certificate("thresholds", "argmin_at_c_star", res <= h, res, h, {"argmin": at, "c_star": cs}))
        checks.append(Certificate("thresholds", "min_exceeds_value", float(g.min()) > sol.value,
                                  float(g.min()) - sol.value, 0.0, {"min": float(g.min()), "value": sol.value}))

    audit = equilibrium_audit(sol, spec, seed=seed)
    checks += list(audit.checks)

    if minimax:
        mm = brute_force_minimax(spec)
        gap = abs(mm.value - sol.value)
        checks.append(Certificate("oracle", "brute_force_minimax", gap <= CAUCHY_TOL and mm.converged, gap,
                                  CAUCHY_TOL, mm.to_dict()))
        checks.append(Certificate("oracle", "refinement_monotone", mm.refined_value <= mm.value + 1e-15,
                                  max(0.0, mm.refined_value - mm.value), 0.0, {}))

    per = solve_per(spec)
    w = efficient_index(spec).w
    nrm = efficient_index(spec).norm
    rng = np.random.Generator(np.random.PCG64(seed))
    ys = rng.normal(0.0, 1.0, size=(100, spec.n)) * np.sqrt(np.diag(spec.Sigma)) * 2.0
    grid = np.linspace(0.0, 1.0, 10001)
    worst_gap = 0.0
    for y in ys:
        a = float(evaluate(per.randomized_rule, y))
        worst_gap = max(worst_gap, posterior_gamma_objective(a, y, spec) - float(posterior_gamma_objective(grid, y, spec).min()))
    checks.append(Certificate("per", "pointwise_optimal", worst_gap <= 1e-10, max(0.0, worst_gap), 1e-10,
                              {"probes": len(ys), "norm": nrm, "w": list(w)}))
    closed, ident = classify_agreement(spec), agreement_by_rule_identity(spec)
    checks.append(Certificate("agreement", "closed_form_matches_rule_identity", closed == ident, 0.0, 0.0,
                              {"closed_form": closed.to_dict(), "rule_identity": ident.to_dict()}))

    if spec.model == "stoye":
        k = spec.params["k"]
        r0 = profiled_regret(per.randomized_rule, 0.0, spec)
        checks.append(Certificate("per", "profiled_regret_at_zero", abs(r0 - k / 2) <= CLOSED_FORM_TOL,
                                  abs(r0 - k / 2), CLOSED_FORM_TOL, {"value": r0, "k": k}))
    for label, rule in rules:
        if is_symmetric(rule):
            e1 = acceptance_probability(rule, spec.mu_bar, spec.Sigma).value
            e2 = acceptance_probability(rule, -spec.mu_bar, spec.Sigma).value
            res = abs(e1 + e2 - 1.0)
            checks.append(Certificate(label, "acceptance_symmetry", res <= 1e-12, res, 1e-12, {}))
    return VerifyReport(tuple(checks))
