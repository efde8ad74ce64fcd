"""Gaussian signal model, identified-set bounds and the two built-in examples.

A :class:`ProblemSpec` bundles the covariance of the signal ``Y ~ N(mu, Sigma)``,
the prior location ``mu_bar`` and a callback returning the bounds of the
identified set for the welfare contrast at a reduced-form mean ``mu``.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from typing import Any, Literal

import numpy as np
from scipy import linalg

from .errors import (
    DegenerateSpecError,
    DomainError,
    InfeasibleSpecError,
    KnifeEdgeError,
    LinearAlgebraError,
)
from .gauss import std_normal_cdf

SPD_PIVOT_TOL = 1e-12
INDEX_TOL = 1e-10


@dataclass(frozen=True)
class IdentifiedBounds:
    """Lower and upper end of the identified set I(mu), in welfare units."""

    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise InfeasibleSpecError(f"empty identified set: lower={self.lower} > upper={self.upper}")

    @property
    def ambiguous(self) -> bool:
        return self.lower < 0.0 < self.upper


@dataclass(frozen=True)
class EfficientIndex:
    """w = Sigma^{-1} mu_bar together with ||w||_Sigma."""

    w: np.ndarray
    norm: float


@dataclass(frozen=True)
class Regime:
    tag: Literal["CaseI", "CaseII"]
    ratio: float
    phi_norm: float


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Immutable problem description.

    ``model`` and ``params`` record how the spec was built so it can be
    serialized; ``bounds`` is the authoritative identified-set provider.
    """

    n: int
    Sigma: np.ndarray
    mu_bar: np.ndarray
    bounds: Callable[[np.ndarray], IdentifiedBounds]
    label: str = ""
    model: str = "custom"
    params: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out = {"model": self.model, "label": self.label, "n": self.n,
               "mu_bar": self.mu_bar.tolist(), "Sigma": self.Sigma.tolist()}
        out.update({k: v for k, v in self.params.items() if k not in out})
        return out


def _check_spd(Sigma: np.ndarray) -> None:
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
        raise LinearAlgebraError(f"covariance must be square, got shape {Sigma.shape}")
    if not np.allclose(Sigma, Sigma.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(Sigma)))):
        raise LinearAlgebraError("covariance must be symmetric")
    try:
        chol = np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError as exc:
        raise LinearAlgebraError(f"covariance is not positive definite: {exc}") from exc
    if np.min(np.diag(chol)) ** 2 <= SPD_PIVOT_TOL * np.max(np.diag(Sigma)):
        raise LinearAlgebraError("covariance is numerically singular")


def make_problem(Sigma, mu_bar, bounds: Callable[[np.ndarray], IdentifiedBounds], label: str = "",
                 model: str = "custom", params: dict[str, Any] | None = None,
                 normalized: bool = True) -> ProblemSpec:
    """Validate inputs and build a spec; by default the sign of ``mu_bar`` is normalized."""
    mu_bar = np.atleast_1d(np.array(mu_bar, dtype=float))
    Sigma = np.atleast_2d(np.array(Sigma, dtype=float))
    if mu_bar.ndim != 1 or Sigma.shape != (mu_bar.size, mu_bar.size):
        raise DomainError(f"Sigma shape {Sigma.shape} incompatible with mu_bar of size {mu_bar.size}")
    if not (np.all(np.isfinite(mu_bar)) and np.all(np.isfinite(Sigma))):
        raise DomainError("Sigma and mu_bar must be finite")
    if np.all(mu_bar == 0.0):
        raise DegenerateSpecError("mu_bar must be nonzero (the efficient index would vanish)")
    _check_spd(Sigma)
    Sigma.setflags(write=False)
    mu_bar.setflags(write=False)
    spec = ProblemSpec(n=mu_bar.size, Sigma=Sigma, mu_bar=mu_bar, bounds=bounds, label=label,
                       model=model, params=dict(params or {}))
    bounds_at(spec, mu_bar)
    bounds_at(spec, -mu_bar)
    return normalize(spec) if normalized else spec


def make_stoye(mu_bar: float, sigma: float, k: float) -> ProblemSpec:
    """Scalar external-validity model: I(mu) = [mu - k, mu + k], Y ~ N(mu, sigma^2)."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if not k >= 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    k = float(k)

    def bounds(mu: np.ndarray) -> IdentifiedBounds:
        m = float(np.asarray(mu).reshape(-1)[0])
        return IdentifiedBounds(m - k, m + k)

    return make_problem(
        [[float(sigma) ** 2]], [float(mu_bar)], bounds,
        label=f"stoye(mu_bar={mu_bar:g}, sigma={sigma:g}, k={k:g})",
        model="stoye", params={"sigma": float(sigma), "k": k},
    )


def make_evidence_aggregation(x0, sites: Sequence[tuple[Any, float]], C: float, mu_bar) -> ProblemSpec:
    """Evidence aggregation across sites with a Lipschitz constant ``C``.

    ``sites`` holds ``(covariates, variance)`` per site. The bounds are the
    intersection bounds max_i{mu_i - C d_i} and min_i{mu_i + C d_i}, where
    ``d_i`` is the Euclidean distance between site i's covariates and ``x0``.
    """
    if len(sites) == 0:
        raise DomainError("need at least one site")
    if not C >= 0:
        raise DomainError(f"C must be nonnegative, got {C}")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    xs = [np.atleast_1d(np.asarray(x, dtype=float)) for x, _ in sites]
    variances = np.array([float(v) for _, v in sites])
    if np.any(variances <= 0):
        raise DomainError("site variances must be positive")
    if any(x.shape != x0.shape for x in xs):
        raise DomainError("site covariates must match the dimension of x0")
    radius = float(C) * np.array([np.linalg.norm(x - x0) for x in xs])
    mu_bar = np.atleast_1d(np.asarray(mu_bar, dtype=float))
    if mu_bar.size != len(sites):
        raise DomainError(f"mu_bar has {mu_bar.size} entries for {len(sites)} sites")

    def bounds(mu: np.ndarray) -> IdentifiedBounds:
        mu = np.asarray(mu, dtype=float).reshape(-1)
        return IdentifiedBounds(float(np.max(mu - radius)), float(np.min(mu + radius)))

    params = {"x0": x0.tolist(), "sites": [{"x": x.tolist(), "variance": float(v)} for x, v in zip(xs, variances)],
              "C": float(C)}
    return make_problem(np.diag(variances), mu_bar, bounds, label=f"evidence(n={len(sites)}, C={C:g})",
                        model="evidence", params=params)


def bounds_at(spec: ProblemSpec, mu) -> IdentifiedBounds:
    """(lower, upper) of the identified set at ``mu``; raises if it is empty."""
    b = spec.bounds(np.atleast_1d(np.asarray(mu, dtype=float)))
    if not isinstance(b, IdentifiedBounds):
        b = IdentifiedBounds(*map(float, b))
    return b


def normalize(spec: ProblemSpec) -> ProblemSpec:
    """Flip the sign of mu_bar if needed so that upper + lower > 0 at mu_bar."""
    b = bounds_at(spec, spec.mu_bar)
    total = b.upper + b.lower
    scale = max(abs(b.upper), abs(b.lower), 1.0)
    if abs(total) <= 1e-14 * scale:
        raise KnifeEdgeError(
            "upper + lower bound is zero at mu_bar; the sign normalization is undefined there"
        )
    if total > 0:
        return spec
    flipped = -spec.mu_bar
    flipped.setflags(write=False)
    return replace(spec, mu_bar=flipped)


def efficient_index(spec: ProblemSpec) -> EfficientIndex:
    """w = Sigma^{-1} mu_bar via a Cholesky solve, and ||w||_Sigma."""
    try:
        w = linalg.cho_solve(linalg.cho_factor(spec.Sigma), spec.mu_bar)
    except (linalg.LinAlgError, ValueError) as exc:
        raise LinearAlgebraError(str(exc)) from exc
    norm_sq = float(spec.mu_bar @ w)
    if norm_sq <= 0:
        raise LinearAlgebraError("mu_bar' Sigma^{-1} mu_bar is not positive")
    quad = float(w @ spec.Sigma @ w)
    if abs(quad - norm_sq) > INDEX_TOL * max(1.0, norm_sq):
        raise LinearAlgebraError(f"index check failed: w'Sigma w={quad} vs w'mu_bar={norm_sq}")
    w.setflags(write=False)
    return EfficientIndex(w=w, norm=float(np.sqrt(norm_sq)))


def identification_ratio(spec: ProblemSpec) -> float:
    """upper / (upper - lower) at mu_bar; defined as 1 under point identification."""
    b = bounds_at(spec, spec.mu_bar)
    if b.upper == b.lower:
        return 1.0
    return b.upper / (b.upper - b.lower)


def classify_regime(spec: ProblemSpec) -> Regime:
    """CaseI iff the identification ratio is at least Phi(||w||_Sigma)."""
    ratio = identification_ratio(spec)
    phi_norm = std_normal_cdf(efficient_index(spec).norm)
    return Regime(tag="CaseI" if ratio >= phi_norm else "CaseII", ratio=ratio, phi_norm=phi_norm)


def spec_from_dict(doc: dict[str, Any]) -> ProblemSpec:
    """Inverse of :meth:`ProblemSpec.to_dict` for the two built-in models."""
    model = doc.get("model")
    if model == "stoye":
        mu = doc["mu_bar"]
        mu = float(mu[0] if isinstance(mu, (list, tuple)) else mu)
        return make_stoye(mu, float(doc["sigma"]), float(doc["k"]))
    if model == "evidence":
        sites = [(s["x"], s["variance"]) for s in doc["sites"]]
        return make_evidence_aggregation(doc["x0"], sites, float(doc["C"]), doc["mu_bar"])
    raise DomainError(f"unknown model {model!r}; expected 'stoye' or 'evidence'")
