import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracle_values import LOGISTIC_2, PHI_MINUS_1_TIMES_1_5, SIGMA_TILDE

from robust_treat.errors import DomainError
from robust_treat.model import make_evidence_aggregation, make_stoye
from robust_treat.regret import (
    GammaPrior,
    bayes_regret,
    expected_regret,
    posterior_gamma_objective,
    posterior_weight,
    profiled_regret,
    worst_case_bayes_regret,
)
from robust_treat.rules import ClampedLinear, Constant, Probit, Threshold, TwoStep

ONE = np.array([[1.0]])


def test_expected_regret_examples():
    for rule in (Constant(0.2), Threshold([1.0], 0.0)):
        assert expected_regret(rule, [0.3], 0.0, ONE) == 0.0
    assert expected_regret(Constant(1.0), [0.0], 2.0, ONE) == 0.0
    assert expected_regret(Constant(1.0), [0.0], -1.0, ONE) == 1.0
    assert abs(expected_regret(Threshold([1.0], 0.0), [1.0], 1.5, ONE) - PHI_MINUS_1_TIMES_1_5) <= 1e-12


@given(st.floats(-10, 10), st.floats(0, 1))
def test_expected_regret_nonnegative(u, a):
    assert expected_regret(Constant(a), [0.0], u, ONE) >= 0.0


def test_gamma_prior_validation():
    with pytest.raises(DomainError):
        GammaPrior(1.2, 0.0)


def test_bayes_regret_examples(stoye_case1, stoye_case2):
    d0 = Threshold([1.0], 0.0)
    assert abs(bayes_regret(d0, GammaPrior(1.0, 0.0), stoye_case1) - PHI_MINUS_1_TIMES_1_5) <= 1e-12
    assert abs(bayes_regret(Constant(0.5), GammaPrior(0.5, 0.5), stoye_case2) - 5.0) <= 1e-12


def test_bayes_regret_rule_free_under_indifference(stoye_case2):
    # q_plus * 11 + (1 - q_plus) * (-9) = 0 and the mirror condition at -mu_bar
    prior = GammaPrior(0.45, 0.55)
    vals = [bayes_regret(r, prior, stoye_case2) for r in
            (Constant(0.0), Constant(1.0), Threshold([1.0], 0.0), Threshold([1.0], 2.5), Probit([1.0], 0.3))]
    assert np.ptp(vals) <= 1e-12


def test_worst_case_examples(stoye_case1, stoye_case2):
    v, prior = worst_case_bayes_regret(Threshold([1.0], 0.0), stoye_case1)
    assert abs(v - PHI_MINUS_1_TIMES_1_5) <= 1e-12 and prior == GammaPrior(1.0, 0.0)
    v, _ = worst_case_bayes_regret(Probit([1.0], SIGMA_TILDE), stoye_case2)
    assert abs(v - 4.95) <= 1e-10
    v, _ = worst_case_bayes_regret(Constant(1.0), stoye_case2)
    assert v == 10.0


RULES = [Constant(0.3), Threshold([1.0], 0.4), Probit([1.0], 2.0), ClampedLinear([1.0], 1.0), TwoStep([1.0], 0.2, 0.9)]


@pytest.mark.parametrize("rule", RULES, ids=lambda r: type(r).__name__)
@pytest.mark.parametrize("k", [0.0, 0.5, 3.0, 10.0])
def test_worst_case_dominates_prior_grid(rule, k):
    spec = make_stoye(1.0, 1.2, k)
    v, arg = worst_case_bayes_regret(rule, spec)
    q = np.linspace(0, 1, 21)
    grid = [bayes_regret(rule, GammaPrior(a, b), spec) for a in q for b in q]
    assert max(grid) <= v + 1e-12
    assert abs(bayes_regret(rule, arg, spec) - v) <= 1e-12


def test_symmetric_rules_have_equal_branches(stoye_case2):
    from robust_treat.regret import worst_case_from_acceptance
    from robust_treat.rules import acceptance_probability
    for rule in (Probit([1.0], 1.3), ClampedLinear([1.0], 2.0), TwoStep([1.0], 0.4, 0.6)):
        ep = acceptance_probability(rule, [1.0], ONE).value
        em = acceptance_probability(rule, [-1.0], ONE).value
        # branch at +mu_bar: max(11 (1 - ep), 9 ep); at -mu_bar: max(9 (1 - em), 11 em)
        assert abs(max(11 * (1 - ep), 9 * ep) - max(9 * (1 - em), 11 * em)) <= 1e-12
        v, _ = worst_case_from_acceptance(ep, em, stoye_case2)
        assert abs(v - max(11 * (1 - ep), 9 * ep)) <= 1e-12


def test_posterior_weight(stoye_case2):
    assert posterior_weight([0.0], stoye_case2).p_plus == 0.5
    assert abs(posterior_weight([1.0], stoye_case2).p_plus - LOGISTIC_2) <= 1e-12
    assert posterior_weight([50.0], stoye_case2).p_plus == 1.0


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_posterior_weight_is_logistic(y1, y2):
    spec = make_evidence_aggregation([0.0], [([0.5], 1.0), ([-0.5], 2.0)], 1.0, [0.3, -0.1])
    t = 0.3 * y1 + (-0.1 / 2.0) * y2
    assert abs(posterior_weight([y1, y2], spec).p_plus - 1 / (1 + np.exp(-2 * t))) <= 1e-12


def test_posterior_objective_examples(stoye_case1, stoye_case2):
    assert posterior_gamma_objective(0.5, [0.0], stoye_case2) == 5.5
    a = np.linspace(0, 1, 101)
    for y in (0.4, -0.4):
        vals = posterior_gamma_objective(a, [y], stoye_case1)
        d = np.diff(vals)
        assert np.all(d < 0) if y > 0 else np.all(d > 0)


@settings(max_examples=40)
@given(st.floats(-3, 3))
def test_posterior_objective_convex_with_kinks(y):
    spec = make_stoye(1.0, 1.0, 10.0)
    a = np.linspace(0, 1, 2001)
    v = posterior_gamma_objective(a, [y], spec)
    second = np.diff(v, 2)
    assert np.all(second >= -1e-12)
    kinks = a[1:-1][second > 1e-9]
    assert all(min(abs(x - 0.45), abs(x - 0.55)) <= 1e-3 for x in kinks)


def test_profiled_regret_examples():
    spec = make_stoye(0.3, 1.0, 2.0)
    per = TwoStep([0.3], 0.4, 0.6)
    assert profiled_regret(per, 0.0, spec) == 1.0
    assert profiled_regret(Constant(1.0), 2.0, spec) == 0.0
    assert profiled_regret(Constant(1.0), -3.0, spec) == 5.0
    with pytest.raises(DomainError):
        profiled_regret(per, 0.0, make_evidence_aggregation([0.0], [([0.5], 1.0), ([-0.5], 1.0)], 1.0,
                                                            [0.3, -0.1]))


@pytest.mark.parametrize("rule", RULES, ids=lambda r: type(r).__name__)
def test_profiled_regret_continuous(rule):
    spec = make_stoye(1.0, 1.0, 2.0)
    for edge in (-2.0, 2.0):
        lo = profiled_regret(rule, edge - 1e-9, spec)
        hi = profiled_regret(rule, edge + 1e-9, spec)
        assert abs(lo - hi) <= 1e-7
