"""Command-line front end.

Commands
--------
``solve``            ex-ante and ex-post solutions plus the agreement report (JSON)
``rule-curve``       actions of selected rules along the signal or its index (CSV)
``profiled-regret``  profiled regret curves in the scalar model (CSV)
``verify``           every oracle check on one problem (JSON); exit 1 if any fails

The problem comes from flags (``--model stoye --mu-bar 1 --sigma 1 --k 10`` or
``--model evidence --x0 0 --site 0.5:1 --site=-0.5:1 --C 1 --mu-bar=0.3,-0.1``;
values starting with a minus sign need the ``--flag=value`` form)
or from ``--spec file.json``. Spec files hold one object:

    {"model": "stoye", "mu_bar": 1.0, "sigma": 1.0, "k": 10.0}
    {"model": "evidence", "x0": [0.0], "C": 1.0, "mu_bar": [0.3, -0.1],
     "sites": [{"x": [0.5], "variance": 1.0}, {"x": [-0.5], "variance": 1.0}]}

JSON output carries ``"schema_version"`` and is written with sorted keys, so
identical inputs give identical bytes. Rules are serialized as
``{"type": ..., "parameters": {...}}``. Floats use the shortest repr that
round-trips exactly.

Rule labels: ``w0`` (threshold at zero), ``rt``, ``linear``, ``step``,
``t_plus``, ``t_minus`` (ex-ante optimal rules in the ambiguous regime),
``threshold_plus``, ``threshold_minus`` (best cutoffs +-c*), ``per`` and
``per_nonrandomized``.

Exit codes: 0 success, 1 verification failure, 2 usage or spec error,
3 numerical failure. ``ROBUST_TREAT_SEED`` overrides ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections.abc import Sequence
from typing import Any

import numpy as np

from .errors import LinearAlgebraError, NumericError, RobustTreatError
from .model import (
    ProblemSpec,
    efficient_index,
    make_evidence_aggregation,
    make_stoye,
    spec_from_dict,
)
from .oracle import curves_to_csv, verify_suite
from .regret import profiled_regret
from .rules import DecisionRule, Threshold, evaluate
from .solver_mmr import solve_mmr
from .solver_per import classify_agreement, solve_per

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _site(text: str) -> tuple[list[float], float]:
    if ":" not in text:
        raise UsageError(f"--site expects X:VARIANCE (X may be comma-separated), got {text!r}")
    x, var = text.rsplit(":", 1)
    return _floats(x), float(var)


def build_spec(args: argparse.Namespace) -> ProblemSpec:
    if (args.spec is None) == (args.model is None):
        raise UsageError("give exactly one of --spec or --model")
    if args.spec is not None:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read spec file {args.spec}: {exc}") from exc
        try:
            return spec_from_dict(doc)
        except (KeyError, TypeError) as exc:
            raise UsageError(f"spec file is missing or mistypes field {exc}") from exc
    if args.mu_bar is None:
        raise UsageError("--mu-bar is required")
    mu = _floats(args.mu_bar)
    if args.model == "stoye":
        if args.sigma is None or args.k is None or len(mu) != 1:
            raise UsageError("stoye needs scalar --mu-bar, --sigma and --k")
        return make_stoye(mu[0], args.sigma, args.k)
    if args.x0 is None or args.C is None or not args.site:
        raise UsageError("evidence needs --x0, --C and at least one --site")
    return make_evidence_aggregation(_floats(args.x0), [_site(s) for s in args.site], args.C, mu)


def resolve_seed(args: argparse.Namespace) -> int:
    env = os.environ.get("ROBUST_TREAT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"ROBUST_TREAT_SEED must be an integer, got {env!r}") from exc
    return int(args.seed)


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dump_json(doc: dict[str, Any]) -> str:
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False, default=_json_default) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def available_rules(spec: ProblemSpec) -> dict[str, DecisionRule]:
    sol, per = solve_mmr(spec), solve_per(spec)
    rules: dict[str, DecisionRule] = {"w0": Threshold(efficient_index(spec).w, 0.0)}
    rules.update(dict(sol.rules))
    rules.update(dict(sol.threshold_rules))
    rules["per"] = per.randomized_rule
    rules["per_nonrandomized"] = per.nonrandomized_rule
    return rules


def _select(spec: ProblemSpec, labels: Sequence[str]) -> dict[str, DecisionRule]:
    rules = available_rules(spec)
    unknown = [lab for lab in labels if lab not in rules]
    if unknown:
        raise UsageError(f"unknown rule label(s) {unknown}; available here: {sorted(rules)}")
    return {lab: rules[lab] for lab in labels}


def _labels(raw: list[str] | None, default: list[str]) -> list[str]:
    if not raw:
        return default
    out: list[str] = []
    for item in raw:
        out += [x.strip() for x in item.split(",") if x.strip()]
    return list(dict.fromkeys(out))


def cmd_solve(args, spec: ProblemSpec) -> int:
    doc = {"spec": spec.to_dict(), "mmr": solve_mmr(spec).to_dict(), "per": solve_per(spec).to_dict(),
           "agreement": classify_agreement(spec).to_dict()}
    _emit(dump_json(doc), args.out)
    return EXIT_OK


def cmd_rule_curve(args, spec: ProblemSpec) -> int:
    """Rule actions on a grid of y.

    For a scalar signal y is Y itself. Otherwise y is the index value w'Y and
    each rule is evaluated at Y = y mu_bar / ||w||^2.
    """
    rules = _select(spec, _labels(args.rule, ["w0", "per"]))
    y = np.linspace(args.y_min, args.y_max, args.points)
    if spec.n == 1:
        Y = y[:, None]
    else:
        Y = np.outer(y, spec.mu_bar) / efficient_index(spec).norm ** 2
    cols = {lab: np.atleast_1d(evaluate(r, Y)) * np.ones(y.size) for lab, r in rules.items()}
    _emit(curves_to_csv("y", y, cols), args.out)
    return EXIT_OK


def cmd_profiled_regret(args, spec: ProblemSpec) -> int:
    if spec.model != "stoye":
        raise UsageError("profiled regret is only available for --model stoye")
    default = ["per", "linear"] if solve_mmr(spec).regime.tag == "CaseII" else ["per", "w0"]
    rules = _select(spec, _labels(args.rule, default))
    k = spec.params["k"]
    span = 5.0 * k if k > 0 else 5.0
    lo = -span if args.mu_min is None else args.mu_min
    hi = span if args.mu_max is None else args.mu_max
    mu = np.linspace(lo, hi, args.points)
    cols = {f"value_{lab}": [profiled_regret(r, m, spec) for m in mu] for lab, r in rules.items()}
    _emit(curves_to_csv("mu", mu, cols), args.out)
    return EXIT_OK


def cmd_verify(args, spec: ProblemSpec, seed: int) -> int:
    overrides = {k: v for k, v in (("sigma_tilde", args.perturb_sigma_tilde), ("beta_star", args.perturb_beta_star),
                                   ("rho_star", args.perturb_rho_star)) if v is not None}
    report = verify_suite(spec, seed=seed, overrides=overrides, mc_draws=args.mc_draws,
                          minimax=not args.skip_minimax)
    doc = {"spec": spec.to_dict(), "seed": seed, "overrides": overrides, **report.to_dict()}
    _emit(dump_json(doc), args.out)
    for c in report.checks:
        if not c.passed:
            print(f"FAIL {c.label}/{c.check}: residual={c.residual:.3e} tol={c.tol:.1e}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="JSON spec file (alternative to --model)")
    common.add_argument("--model", choices=("stoye", "evidence"))
    common.add_argument("--mu-bar", dest="mu_bar", help="prior location; comma-separated for evidence")
    common.add_argument("--sigma", type=float, help="signal sd (stoye)")
    common.add_argument("--k", type=float, help="external-validity radius (stoye)")
    common.add_argument("--C", type=float, help="Lipschitz constant (evidence)")
    common.add_argument("--x0", help="target covariates, comma-separated (evidence)")
    common.add_argument("--site", action="append", help="X:VARIANCE per site, repeatable (evidence)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="robust-treat", description="Robust Bayes treatment rules under partial identification.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve and print JSON")

    rc = sub.add_parser("rule-curve", parents=[common], help="rule actions along the index, CSV")
    rc.add_argument("--rule", action="append", help="rule label(s), comma-separated or repeated")
    rc.add_argument("--y-min", type=float, default=-4.0)
    rc.add_argument("--y-max", type=float, default=4.0)
    rc.add_argument("--points", type=int, default=401)

    pr = sub.add_parser("profiled-regret", parents=[common], help="profiled regret curves, CSV")
    pr.add_argument("--rule", action="append")
    pr.add_argument("--mu-min", type=float)
    pr.add_argument("--mu-max", type=float)
    pr.add_argument("--points", type=int, default=501)

    vf = sub.add_parser("verify", parents=[common], help="run all oracle checks")
    vf.add_argument("--mc-draws", type=int, default=1_000_000)
    vf.add_argument("--skip-minimax", action="store_true", help="skip the brute-force minimax oracle")
    vf.add_argument("--perturb-sigma-tilde", type=float, help="negative control: shift sigma_tilde")
    vf.add_argument("--perturb-beta-star", type=float, help="negative control: shift beta_star")
    vf.add_argument("--perturb-rho-star", type=float, help="negative control: shift rho_star")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "points", 2) < 2:
            raise UsageError("--points must be at least 2")
        seed = resolve_seed(args)
        spec = build_spec(args)
        if args.command == "solve":
            return cmd_solve(args, spec)
        if args.command == "rule-curve":
            return cmd_rule_curve(args, spec)
        if args.command == "profiled-regret":
            return cmd_profiled_regret(args, spec)
        return cmd_verify(args, spec, seed)
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, RobustTreatError, LinearAlgebraError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
