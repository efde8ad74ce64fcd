"""Robust Bayes treatment choice with partially identified welfare and a Gaussian signal."""

from .errors import (
    DegenerateSpecError,
    DomainError,
    InfeasibleSpecError,
    KnifeEdgeError,
    LinearAlgebraError,
    NumericError,
    RegimeError,
    RobustTreatError,
    SpecError,
)
from .model import (
    EfficientIndex,
    IdentifiedBounds,
    ProblemSpec,
    Regime,
    bounds_at,
    classify_regime,
    efficient_index,
    make_evidence_aggregation,
    make_problem,
    make_stoye,
    normalize,
)
from .oracle import (
    MinimaxGrid,
    brute_force_minimax,
    brute_force_per,
    dominance_scan,
    equilibrium_audit,
)
from .regret import (
    GammaPrior,
    bayes_regret,
    posterior_gamma_objective,
    profiled_regret,
    worst_case_bayes_regret,
)
from .rules import (
    ClampedLinear,
    Constant,
    Mixture,
    Probit,
    Tabulated,
    Threshold,
    TwoStep,
    acceptance_probability,
    evaluate,
    mc_acceptance,
)
from .solver_mmr import MmrSolution, solve_mmr, verify_moment_conditions
from .solver_per import AgreementReport, PerSolution, classify_agreement, solve_per

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "ClampedLinear",
    "Constant",
    "DegenerateSpecError",
    "DomainError",
    "EfficientIndex",
    "GammaPrior",
    "IdentifiedBounds",
    "InfeasibleSpecError",
    "KnifeEdgeError",
    "LinearAlgebraError",
    "MinimaxGrid",
    "Mixture",
    "MmrSolution",
    "NumericError",
    "PerSolution",
    "Probit",
    "ProblemSpec",
    "Regime",
    "RegimeError",
    "RobustTreatError",
    "SpecError",
    "Tabulated",
    "Threshold",
    "TwoStep",
    "acceptance_probability",
    "bayes_regret",
    "bounds_at",
    "brute_force_minimax",
    "brute_force_per",
    "classify_agreement",
    "classify_regime",
    "dominance_scan",
    "efficient_index",
    "equilibrium_audit",
    "evaluate",
    "make_evidence_aggregation",
    "make_problem",
    "make_stoye",
    "mc_acceptance",
    "normalize",
    "posterior_gamma_objective",
    "profiled_regret",
    "solve_mmr",
    "solve_per",
    "verify_moment_conditions",
    "worst_case_bayes_regret",
]
