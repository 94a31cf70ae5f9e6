"""Command-line interface: rejection-rate tables, single-dataset tests,
limit-law quantiles and CF tables, and threshold-rule classification."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .distributions import Pareto
from .limits import (
    InversionConfig,
    LimitLaw,
    eta_law,
    invert_cdf,
    invert_pdf,
    quantile,
    stable_half_skew_pos,
    stable_skew_neg,
    t_alpha_h_law,
    xi_law,
)
from .montecarlo import BudgetError, SimPlan, simulate_rejection_rates
from .testing import TestConfig, run_test
from .truncation import RULES_STANDARD, TruncationRule, classify_rule

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3

DEFAULT_N_LIST = (10**3, 10**4, 10**5)


def _parse_rules(text: str) -> tuple[TruncationRule, ...]:
    if text == "standard":
        return RULES_STANDARD
    return tuple(TruncationRule.parse(part) for part in text.split(";") if part)


def _parse_law(args) -> LimitLaw:
    name = args.law
    if name == "normal":
        return LimitLaw("normal")
    if name == "levy":
        return LimitLaw("levy")
    if name == "xi":
        return xi_law(args.alpha, args.h)
    if name == "eta":
        return eta_law(args.alpha, args.h)
    if name == "t_alpha_h":
        return t_alpha_h_law(args.alpha, args.h)
    if name == "stable_neg":
        return stable_skew_neg(args.alpha)
    if name == "stable_half_pos":
        return stable_half_skew_pos(args.alpha)
    raise ValueError(f"unknown law {name!r}")


def _write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _read_data_csv(path: str) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1 and line.lower() == "x":
                continue
            try:
                v = float(line)
            except ValueError:
                raise ValueError(f"line {lineno}: not a number: {line!r}") from None
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"line {lineno}: values must be finite and nonnegative, got {line!r}")
            values.append(v)
    if not values:
        raise ValueError("data file contains no values")
    return np.asarray(values)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="truncmean",
        description="Truncated-sample-mean hypothesis testing for extremely heavy-tailed data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sim_flags(p, defaults_reps):
        p.add_argument("--config", help="JSON plan file; inline flags override its fields")
        p.add_argument("--alpha0", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--rules", "--rule", dest="rules", default=None,
                       help='semicolon-separated rule specs, e.g. "log_n;pow:0.5", or "standard"')
        p.add_argument("--n", default=None, help="comma-separated sample sizes")
        p.add_argument("--reps", type=int, default=None,
                       help=f"repetitions per cell (default {defaults_reps})")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--modes", default=None,
                       help="comma-separated subset of known_var,estimated_var,stable_region")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--allow-large", action="store_true",
                       help="override the draw-budget guard")
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p_tables = sub.add_parser("tables", help="reproduce the rejection-rate tables at desk scale")
    add_sim_flags(p_tables, 10**4)

    p_sim = sub.add_parser("simulate", help="run a rejection-rate plan from a JSON config")
    add_sim_flags(p_sim, 10**4)

    p_test = sub.add_parser("test", help="run the truncated-mean test on a CSV dataset")
    p_test.add_argument("--data", required=True, help="CSV file, one nonnegative value per line")
    p_test.add_argument("--alpha0", type=float, required=True)
    p_test.add_argument("--beta", type=float, default=0.05)
    p_test.add_argument("--rule", default="pow:0.5")
    p_test.add_argument("--variance-mode", choices=("known", "estimated"), default="estimated")
    p_test.add_argument("--out", default=None)

    p_q = sub.add_parser("quantile", help="quantile of a limit law")
    p_q.add_argument("--law", required=True,
                     choices=("normal", "levy", "xi", "eta", "t_alpha_h", "stable_neg", "stable_half_pos"))
    p_q.add_argument("--p", type=float, required=True)
    p_q.add_argument("--alpha", type=float, default=0.5)
    p_q.add_argument("--h", type=float, default=1.0)

    p_cf = sub.add_parser("cfpdf", help="emit (x, pdf, cdf) of a limit law as CSV")
    p_cf.add_argument("--law", required=True,
                      choices=("normal", "levy", "xi", "eta", "t_alpha_h", "stable_neg", "stable_half_pos"))
    p_cf.add_argument("--alpha", type=float, default=0.5)
    p_cf.add_argument("--h", type=float, default=1.0)
    p_cf.add_argument("--x-min", type=float, required=True)
    p_cf.add_argument("--x-max", type=float, required=True)
    p_cf.add_argument("--points", type=int, default=101)
    p_cf.add_argument("--out", default=None)

    p_cl = sub.add_parser("classify", help="classify a threshold rule against the critical sequence")
    p_cl.add_argument("--alpha0", type=float, required=True)
    p_cl.add_argument("--rule", required=True)
    p_cl.add_argument("--n-grid", default=None, help="comma-separated increasing sample sizes")

    return parser


def _plan_from_args(args) -> SimPlan:
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
    plan = {
        "alpha0": cfg.get("alpha0", 0.5),
        "rules": cfg.get("rules"),
        "n_list": cfg.get("n_list", list(DEFAULT_N_LIST)),
        "reps": cfg.get("reps", 10**4),
        "beta": cfg.get("beta", 0.05),
        "seed": cfg.get("seed", 0),
        "modes": cfg.get("modes", ["known_var", "estimated_var", "stable_region"]),
        "draw_budget": cfg.get("draw_budget", 1e10),
        "allow_large": cfg.get("allow_large", False),
        "workers": cfg.get("workers", 1),
    }
    # inline flags take precedence over the config file
    if args.alpha0 is not None:
        plan["alpha0"] = args.alpha0
    if args.beta is not None:
        plan["beta"] = args.beta
    if args.reps is not None:
        plan["reps"] = args.reps
    if args.seed is not None:
        plan["seed"] = args.seed
    if args.workers is not None:
        plan["workers"] = args.workers
    if args.allow_large:
        plan["allow_large"] = True
    if args.n is not None:
        plan["n_list"] = [int(float(v)) for v in args.n.split(",") if v]
    if args.modes is not None:
        plan["modes"] = [m for m in args.modes.split(",") if m]
    if args.rules is not None:
        rules = _parse_rules(args.rules)
    elif plan["rules"] is not None:
        rules = tuple(TruncationRule.from_json(r) for r in plan["rules"])
    else:
        rules = RULES_STANDARD
    if plan["alpha0"] != 0.5:
        plan["modes"] = [m for m in plan["modes"] if m != "stable_region"]
    return SimPlan(
        alpha0=plan["alpha0"],
        rules=rules,
        n_list=tuple(plan["n_list"]),
        reps=plan["reps"],
        beta=plan["beta"],
        seed=plan["seed"],
        modes=frozenset(plan["modes"]),
        draw_budget=plan["draw_budget"],
        allow_large=plan["allow_large"],
        workers=plan["workers"],
    )


def _cmd_simulate(args) -> int:
    plan = _plan_from_args(args)
    result = simulate_rejection_rates(plan)
    if args.format == "json":
        _write_output(json.dumps(result.to_json(), indent=2) + "\n", args.out)
    else:
        _write_output(result.to_csv(), args.out)
    return EXIT_OK


def _cmd_test(args) -> int:
    data = _read_data_csv(args.data)
    config = TestConfig(
        alpha0=args.alpha0,
        rule=TruncationRule.parse(args.rule),
        beta=args.beta,
        variance_mode=args.variance_mode,
    )
    outcome = run_test(data, config)
    _write_output(json.dumps(outcome.to_json(), indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_quantile(args) -> int:
    law = _parse_law(args)
    sys.stdout.write(f"{quantile(law, args.p):.17g}\n")
    return EXIT_OK


def _cmd_cfpdf(args) -> int:
    law = _parse_law(args)
    if args.points < 2 or args.x_max <= args.x_min:
        raise ValueError("need x_max > x_min and points >= 2")
    xs = np.linspace(args.x_min, args.x_max, args.points)
    cfg = InversionConfig(x_grid=tuple(xs))
    lines = [f"# truncmean cfpdf law={args.law} alpha={args.alpha} h={args.h}", "x,pdf,cdf"]
    for x in xs:
        lines.append(f"{x:.6g},{invert_pdf(law, x, cfg):.6g},{invert_cdf(law, x, cfg):.6g}")
    _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_classify(args) -> int:
    rule = TruncationRule.parse(args.rule)
    model = Pareto(args.alpha0)
    n_grid = None
    if args.n_grid:
        n_grid = [int(float(v)) for v in args.n_grid.split(",") if v]
    regime = classify_rule(rule, model, n_grid)
    sys.stdout.write(regime.value + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("tables", "simulate"):
            return _cmd_simulate(args)
        if args.command == "test":
            return _cmd_test(args)
        if args.command == "quantile":
            return _cmd_quantile(args)
        if args.command == "cfpdf":
            return _cmd_cfpdf(args)
        if args.command == "classify":
            return _cmd_classify(args)
        parser.error(f"unknown command {args.command!r}")
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
