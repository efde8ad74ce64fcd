"""Decision rules d: R^n -> [0, 1] and their acceptance probabilities E_mu[d(Y)].

Every non-constant rule acts on Y through one linear index ``t = w'Y``. Under
``Y ~ N(mu, Sigma)`` the index is ``N(w'mu, w'Sigma w)``, so all acceptance
probabilities reduce to one-dimensional Gaussian expectations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Literal, Union

import numpy as np

from .errors import DomainError, NumericError
from .gauss import TAIL_SD, integrate, sample_gaussian, std_normal_cdf

QUAD_PANELS = 48


def _vec(w) -> tuple[float, ...]:
    out = tuple(float(x) for x in np.atleast_1d(np.asarray(w, dtype=float)).ravel())
    if not out:
        raise DomainError("index vector must be nonempty")
    return out


def _prob(a: float, name: str) -> float:
    a = float(a)
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {a}")
    return a


@dataclass(frozen=True)
class Threshold:
    """1{w'Y >= c}."""

    w: tuple[float, ...]
    c: float = 0.0

    def __init__(self, w, c: float = 0.0):
        object.__setattr__(self, "w", _vec(w))
        object.__setattr__(self, "c", float(c))


@dataclass(frozen=True)
class Probit:
    """Phi(w'Y / sigma_tilde): a threshold rule with an independent N(0, sigma_tilde^2) cutoff."""

    w: tuple[float, ...]
    sigma_tilde: float

    def __init__(self, w, sigma_tilde: float):
        if not sigma_tilde > 0:
            raise DomainError(f"sigma_tilde must be positive, got {sigma_tilde}")
        object.__setattr__(self, "w", _vec(w))
        object.__setattr__(self, "sigma_tilde", float(sigma_tilde))


@dataclass(frozen=True)
class ClampedLinear:
    """(w'Y + rho) / (2 rho) clamped to [0, 1]."""

    w: tuple[float, ...]
    rho: float

    def __init__(self, w, rho: float):
        if not rho > 0:
            raise DomainError(f"rho must be positive, got {rho}")
        object.__setattr__(self, "w", _vec(w))
        object.__setattr__(self, "rho", float(rho))


@dataclass(frozen=True)
class TwoStep:
    """``lo`` when w'Y < 0 and ``hi`` when w'Y >= 0."""

    w: tuple[float, ...]
    lo: float
    hi: float

    def __init__(self, w, lo: float, hi: float):
        object.__setattr__(self, "w", _vec(w))
        object.__setattr__(self, "lo", _prob(lo, "lo"))
        object.__setattr__(self, "hi", _prob(hi, "hi"))


@dataclass(frozen=True)
class Constant:
    a: float

    def __init__(self, a: float):
        object.__setattr__(self, "a", _prob(a, "a"))


@dataclass(frozen=True)
class Mixture:
    """Convex combination of rules."""

    weights: tuple[float, ...]
    components: tuple[DecisionRule, ...]

    def __init__(self, weights, components):
        weights = tuple(float(x) for x in weights)
        components = tuple(components)
        if len(weights) != len(components) or not components:
            raise DomainError("mixture needs one weight per component and at least one component")
        if min(weights) < 0 or abs(sum(weights) - 1.0) > 1e-12:
            raise DomainError(f"mixture weights must be a probability vector, got {weights}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise constant in t = w'Y.

    ``values[0]`` applies for t < knots[0], ``values[i]`` on
    [knots[i-1], knots[i]) and ``values[-1]`` for t >= knots[-1].
    """

    w: tuple[float, ...]
    knots: tuple[float, ...]
    values: tuple[float, ...]

    def __init__(self, w, knots, values):
        knots = tuple(float(x) for x in knots)
        values = tuple(_prob(v, "tabulated value") for v in values)
        if len(values) != len(knots) + 1:
            raise DomainError(f"need len(values) == len(knots) + 1, got {len(values)} and {len(knots)}")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise DomainError("knots must be strictly increasing")
        object.__setattr__(self, "w", _vec(w))
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)


DecisionRule = Union[Threshold, Probit, ClampedLinear, TwoStep, Constant, Mixture, Tabulated]


@dataclass(frozen=True)
class AcceptanceProbability:
    value: float
    method: Literal["closed_form", "quadrature"]


def _index(rule, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    w = np.asarray(rule.w)
    if Y.ndim == 0:
        Y = Y.reshape(1)
    if Y.shape[-1] != w.size:
        raise DomainError(f"Y has dimension {Y.shape[-1]}, rule index has dimension {w.size}")
    return Y @ w


def action_on_index(rule: DecisionRule, t):
    """Action of an index rule as a function of its own index value ``t``."""
    t = np.asarray(t, dtype=float)
    if isinstance(rule, Threshold):
        return np.where(t >= rule.c, 1.0, 0.0)
    if isinstance(rule, Probit):
        return std_normal_cdf(t / rule.sigma_tilde)
    if isinstance(rule, ClampedLinear):
        return np.clip((t + rule.rho) / (2.0 * rule.rho), 0.0, 1.0)
    if isinstance(rule, TwoStep):
        return np.where(t >= 0.0, rule.hi, rule.lo)
    if isinstance(rule, Tabulated):
        return np.asarray(rule.values)[np.searchsorted(rule.knots, t, side="right")]
    raise DomainError(f"{type(rule).__name__} has no single index")


def evaluate(rule: DecisionRule, Y):
    """The action d(Y). ``Y`` may be one vector or an array of shape (m, n)."""
    if isinstance(rule, Constant):
        Y = np.asarray(Y, dtype=float)
        return rule.a if Y.ndim <= 1 else np.full(Y.shape[0], rule.a)
    if isinstance(rule, Mixture):
        parts = [wt * np.asarray(evaluate(c, Y)) for wt, c in zip(rule.weights, rule.components)]
        out = np.sum(parts, axis=0)
        return float(out) if np.ndim(out) == 0 else out
    t = _index(rule, Y)
    out = action_on_index(rule, t)
    return float(out) if np.ndim(out) == 0 else out


def index_moments(w, mu, Sigma) -> tuple[float, float]:
    """Mean and standard deviation of w'Y under Y ~ N(mu, Sigma)."""
    w = np.asarray(w, dtype=float)
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    if mu.size != w.size or Sigma.shape != (w.size, w.size):
        raise DomainError("dimensions of w, mu and Sigma disagree")
    var = float(w @ Sigma @ w)
    if not var > 0:
        raise DomainError("degenerate index: w'Sigma w = 0")
    return float(w @ mu), float(np.sqrt(var))


def _gauss_expect(action, m: float, s: float, pieces) -> float:
    """Integral of action(t) * N(t; m, s^2) over the listed smooth pieces, clipped to m +- TAIL_SD s."""
    lo_all, hi_all = m - TAIL_SD * s, m + TAIL_SD * s
    total = 0.0
    for a, b in pieces:
        a, b = max(a, lo_all), min(b, hi_all)
        if a >= b:
            continue
        total += integrate(lambda t: action(t) * np.exp(-0.5 * ((t - m) / s) ** 2) / (s * np.sqrt(2 * np.pi)),
                           a, b, QUAD_PANELS)
    return total


def acceptance_probability(rule: DecisionRule, mu, Sigma) -> AcceptanceProbability:
    """E_mu[d(Y)] under Y ~ N(mu, Sigma)."""
    if isinstance(rule, Constant):
        return AcceptanceProbability(rule.a, "closed_form")
    if isinstance(rule, Mixture):
        parts = [acceptance_probability(c, mu, Sigma) for c in rule.components]
        value = sum(wt * p.value for wt, p in zip(rule.weights, parts))
        method = "quadrature" if any(p.method == "quadrature" for p in parts) else "closed_form"
        return AcceptanceProbability(min(1.0, max(0.0, value)), method)

    m, s = index_moments(rule.w, mu, Sigma)
    if isinstance(rule, Threshold):
        return AcceptanceProbability(1.0 - std_normal_cdf((rule.c - m) / s), "closed_form")
    if isinstance(rule, Probit):
        return AcceptanceProbability(std_normal_cdf(m / np.hypot(rule.sigma_tilde, s)), "closed_form")
    if isinstance(rule, TwoStep):
        below = std_normal_cdf(-m / s)
        return AcceptanceProbability(rule.lo * below + rule.hi * (1.0 - below), "closed_form")
    if isinstance(rule, Tabulated):
        edges = np.concatenate(([-np.inf], rule.knots, [np.inf]))
        z = np.clip((edges - m) / s, -40.0, 40.0)
        mass = np.diff(std_normal_cdf(z))
        value = float(np.dot(mass, rule.values))
        return AcceptanceProbability(min(1.0, max(0.0, value)), "closed_form")
    if isinstance(rule, ClampedLinear):
        rho = rule.rho
        ramp = _gauss_expect(lambda t: (t + rho) / (2.0 * rho), m, s, [(-rho, rho)])
        upper = _gauss_expect(lambda t: np.ones_like(t), m, s, [(rho, np.inf)])
        value = ramp + upper
        if not np.isfinite(value):
            raise NumericError("quadrature produced a non-finite acceptance probability")
        return AcceptanceProbability(min(1.0, max(0.0, value)), "quadrature")
    raise DomainError(f"unsupported rule type {type(rule).__name__}")


def mc_acceptance(rule: DecisionRule, mu, Sigma, count: int = 1_000_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of E_mu[d(Y)] and its standard error."""
    if count < 1:
        raise DomainError("count must be >= 1")
    draws = sample_gaussian(mu, Sigma, count, seed)
    actions = np.asarray(evaluate(rule, draws), dtype=float)
    if actions.ndim == 0 or np.all(actions == actions[0]):
        return float(actions.ravel()[0]), 0.0
    est = float(actions.mean())
    se = float(actions.std(ddof=1) / np.sqrt(count)) if count > 1 else 0.0
    return est, se


def is_symmetric(rule: DecisionRule) -> bool:
    """True when d(-Y) = 1 - d(Y) for every Y (up to the measure-zero boundary)."""
    if isinstance(rule, Threshold):
        return rule.c == 0.0
    if isinstance(rule, (Probit, ClampedLinear)):
        return True
    if isinstance(rule, TwoStep):
        return abs(rule.lo + rule.hi - 1.0) <= 1e-15
    if isinstance(rule, Constant):
        return rule.a == 0.5
    if isinstance(rule, Mixture):
        return all(is_symmetric(c) for c in rule.components)
    if isinstance(rule, Tabulated):
        k, v = np.asarray(rule.knots), np.asarray(rule.values)
        return bool(np.allclose(k, -k[::-1], atol=0) and np.allclose(v + v[::-1], 1.0, atol=1e-15))
    return False


# ---------------------------------------------------------------- serialization

_TYPES = {
    "threshold": Threshold, "probit": Probit, "clamped_linear": ClampedLinear,
    "two_step": TwoStep, "constant": Constant, "mixture": Mixture, "tabulated": Tabulated,
}
_NAMES = {v: k for k, v in _TYPES.items()}


def rule_to_dict(rule: DecisionRule) -> dict[str, Any]:
    """JSON-ready tagged union ``{"type": ..., "parameters": {...}}``."""
    kind = _NAMES[type(rule)]
    if isinstance(rule, Mixture):
        params = {"weights": list(rule.weights), "components": [rule_to_dict(c) for c in rule.components]}
    else:
        params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(rule).items()}
    return {"type": kind, "parameters": params}


def rule_from_dict(doc: dict[str, Any]) -> DecisionRule:
    try:
        cls = _TYPES[doc["type"]]
    except KeyError as exc:
        raise DomainError(f"unknown rule type {doc.get('type')!r}") from exc
    params = dict(doc["parameters"])
    if cls is Mixture:
        params["components"] = [rule_from_dict(c) for c in params["components"]]
    return cls(**params)
