"""
Command-line front-end: tail-index estimation, threshold selection, naive, honest and
k-snooping confidence intervals, critical-value tables and the Monte Carlo study.
"""
import argparse
import dataclasses
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from common import CV_TABLE_PATH, SEED, STUDY_CONFIG, WORKERS, configure_logging, cv_table_target, progress_enabled
from lib.critical_values import (
    CriticalValue, as_fraction, build_table, build_table_with_draws, format_fraction, load_default_table, lookup,
    save_table, sup_histogram,
)
from lib.data.critical_values import BETAS, DEFAULT_N_SIMS, DEFAULT_N_STEPS, R_LOWERS
from lib.data.study_grids import (
    DEFAULT_BETA, DEFAULT_P, DEFAULT_R_LOWER, DESK_GRID, INDEX_METHODS, METHOD_DESCRIPTIONS, QUANTILE_METHODS,
)
from lib.errors import ConfigurationError, HonestTailError, InputError
from lib.ingest import read_column
from lib.intervals import (
    BiasBudget, Interval, honest_ci_index, honest_ci_quantile, naive_ci_index, naive_ci_quantile,
    naive_z, rule_of_thumb_budget, snooping_ci_index, snooping_ci_quantile,
)
from lib.study import parse_methods, run_study
from lib.tail_estimators import (
    Sample, hill, hill_path, left_tail_transform, restore_left_tail_interval, weissman_quantile,
)
from lib.threshold_selection import SelectionConfig, select_k


logger = logging.getLogger("main")

INTERVAL_COLUMNS = ["method", "target", "k", "k_lo", "k_hi", "lo", "hi", "estimate", "q",
                    "A", "rho", "bound", "flags", "cutoff"]


def load_config(config_file: Optional[str] = None) -> dict:
    """
    Load a Monte Carlo study preset from a JSON file.

    :param config_file: Path to the preset. If None, checks HONEST_TAIL_STUDY_CONFIG or defaults to config_desk_scale.json
    :return: Configuration dictionary
    """
    if config_file is None:
        config_file = STUDY_CONFIG

    if not os.path.exists(config_file):
        raise FileNotFoundError(f"Configuration file not found: {config_file}")

    with open(config_file, 'r', encoding="utf-8") as f:
        config = json.load(f)

    logger.info("Loaded configuration from: %s", config_file)
    if 'description' in config:
        logger.info("  Description: %s", config['description'])

    return config


def _emit(report: Dict[str, Any], rows: List[Dict[str, Any]], args: argparse.Namespace,
          columns: Optional[Sequence[str]] = None) -> None:
    """
    Write the JSON report or the CSV rows to --output, or to stdout.
    """
    if args.format == "csv":
        text = pd.DataFrame(rows, columns=columns).to_csv(index=False, lineterminator="\n")
    else:
        text = json.dumps(report, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        logger.info("Wrote %s report to %s", args.format, args.output)
    else:
        sys.stdout.write(text)


def _load_sample(args: argparse.Namespace) -> Sample:
    """
    Read --input, apply --scale and, when --cutoff is set, the left-tail transform.
    """
    if not args.input:
        raise InputError("No input file given; pass --input PATH")
    values = read_column(args.input, args.column).values
    if not args.scale > 0:
        raise ConfigurationError(f"--scale must be positive, got {args.scale}")
    values = values * args.scale
    if getattr(args, "cutoff", None) is not None:
        return left_tail_transform(values, args.cutoff)
    return Sample.from_values(values)


def _selection(args: argparse.Namespace) -> SelectionConfig:
    return SelectionConfig(c_crit=args.c_crit, k_min_frac=args.k_min_frac, k_max_frac=args.k_max_frac)


def _resolve_k(sample: Sample, args: argparse.Namespace) -> Dict[str, Any]:
    """
    Use --k when given, otherwise the data-driven choice.
    """
    if args.k is not None:
        return {"k": args.k, "k_source": "user", "fallback": False}
    choice = select_k(sample, _selection(args))
    logger.info("Selected k = %d%s", choice.k, " (fallback to the upper bound)" if choice.fallback else "")
    return {"k": choice.k, "k_source": "select_k", "fallback": choice.fallback}


def _sample_info(sample: Sample, args: argparse.Namespace) -> Dict[str, Any]:
    info = {"input": args.input, "column": args.column, "n": sample.n, "scale": args.scale}
    if getattr(args, "cutoff", None) is not None:
        info.update({"cutoff": args.cutoff, "dropped": sample.dropped})
    return info


def cmd_estimate(args: argparse.Namespace) -> None:
    """
    Report xi_hat at the chosen k, the Hill path on request and the Weissman quantile when --p is set.
    """
    sample = _load_sample(args)
    chosen = _resolve_k(sample, args)
    k = chosen["k"]
    estimate = hill(sample, k)
    report: Dict[str, Any] = {"command": "estimate", **_sample_info(sample, args), **chosen,
                              "xi_hat": estimate.xi_hat}
    row: Dict[str, Any] = {"k": k, "xi_hat": estimate.xi_hat}
    if args.p is not None:
        quantile = weissman_quantile(sample, k, args.p)
        report["quantile"] = {"p": args.p, "q_hat": quantile.q_hat}
        row.update({"p": args.p, "q_hat": quantile.q_hat})
    rows = [row]
    if args.path:
        k_hi = args.k_hi if args.k_hi is not None else sample.n - 1
        path = [{"k": est.k, "xi_hat": est.xi_hat} for est in hill_path(sample, args.k_lo, k_hi)]
        report["path"] = path
        rows = path
    _emit(report, rows, args)


def cmd_select_k(args: argparse.Namespace) -> None:
    """
    Report the selected threshold together with the criterion trace over the search bracket.
    """
    sample = _load_sample(args)
    choice = select_k(sample, _selection(args))
    trace = [{"k": int(k), "criterion": float(c)} for k, c in zip(choice.trace.ks, choice.trace.values)]
    report = {"command": "select-k", **_sample_info(sample, args), "k": choice.k,
              "fallback": choice.fallback, "k_lo": choice.k_lo, "k_hi": choice.k_hi,
              "c_crit": choice.c_crit, "trace": trace}
    _emit(report, trace, args, columns=["k", "criterion"])


def _user_budget(args: argparse.Namespace) -> Optional[BiasBudget]:
    """
    Fixed (A, rho) budget from the flags, or None for the rule of thumb.
    """
    if args.rule_of_thumb or (args.A is None and args.rho is None):
        return None
    if args.A is None or args.rho is None:
        raise ConfigurationError("--A and --rho must be given together")
    return BiasBudget.from_parameters(args.A, args.rho)


def _interval_row(record: Dict[str, Any]) -> Dict[str, Any]:
    row = dict(record)
    k_range = row.pop("k_range", None)
    row["k_lo"], row["k_hi"] = (k_range if k_range is not None else (None, None))
    row["flags"] = ";".join(row["flags"])
    return row


def _flag_interpolated(interval: Interval, critical_value: CriticalValue) -> Interval:
    if not critical_value.interpolated:
        return interval
    return dataclasses.replace(interval, flags=tuple(interval.flags) + ("q_interpolated",))


def _intervals(args: argparse.Namespace, allowed: Sequence[str]) -> None:
    sample = _load_sample(args)
    methods = parse_methods(args.methods)
    stray = [m for m in methods if m not in allowed]
    if stray:
        raise ConfigurationError(f"Method(s) {stray} do not belong to this command; choose from {list(allowed)}")
    quantile_target = allowed == QUANTILE_METHODS
    if quantile_target and args.p is None:
        raise ConfigurationError("quantile-ci needs the tail probability --p")

    chosen = _resolve_k(sample, args)
    k = chosen["k"]
    table = load_default_table(args.cv_table or CV_TABLE_PATH)
    fixed_budget = _user_budget(args)
    budget = fixed_budget
    if budget is None and any(m in ("HO", "IO") for m in methods):
        budget = rule_of_thumb_budget(hill(sample, k).xi_hat, k)
    z = naive_z(args.beta)
    point_cv = lookup(table, 1, args.beta)
    q_point = point_cv.q
    r_lower = float(as_fraction(args.r_lower))

    intervals: List[Interval] = []
    for method in methods:
        if method == "HN":
            intervals.append(naive_ci_index(sample, k, z=z))
        elif method == "HO":
            intervals.append(_flag_interpolated(honest_ci_index(sample, k, q_point, budget), point_cv))
        elif method == "HS":
            snoop_cv = lookup(table, args.r_lower, args.beta)
            intervals.append(_flag_interpolated(
                snooping_ci_index(sample, k, r_lower, snoop_cv.q, budget=fixed_budget), snoop_cv))
        elif method == "IN":
            intervals.append(naive_ci_quantile(sample, k, args.p, z=z))
        elif method == "IO":
            intervals.append(_flag_interpolated(honest_ci_quantile(sample, k, args.p, q_point, budget), point_cv))
        else:
            snoop_cv = lookup(table, args.r_lower, args.beta)
            intervals.append(_flag_interpolated(
                snooping_ci_quantile(sample, k, r_lower, args.p, snoop_cv.q, budget=fixed_budget), snoop_cv))

    if quantile_target and args.cutoff is not None:
        intervals = [restore_left_tail_interval(interval, args.cutoff) for interval in intervals]

    records = [interval.to_record() for interval in intervals]
    report = {"command": "quantile-ci" if quantile_target else "ci", **_sample_info(sample, args), **chosen,
              "beta": args.beta, "r_lower": format_fraction(as_fraction(args.r_lower)),
              "table_source": table.source, "intervals": records}
    _emit(report, [_interval_row(r) for r in records], args, columns=INTERVAL_COLUMNS)


def cmd_ci(args: argparse.Namespace) -> None:
    """
    Tail-index intervals HN, HO, HS.
    """
    _intervals(args, INDEX_METHODS)


def cmd_quantile_ci(args: argparse.Namespace) -> None:
    """
    Extreme-quantile intervals IN, IO, IS; in left-tail mode they are reflected back to the input scale.
    """
    _intervals(args, QUANTILE_METHODS)


def cmd_cv_table(args: argparse.Namespace) -> None:
    """
    Simulate the critical-value table and cache it with its provenance.
    """
    r_lowers = [r.strip() for r in args.r_lowers.split(",") if r.strip()]
    betas = [float(b) for b in args.betas.split(",") if b.strip()]
    target = cv_table_target(args.output)
    if args.histogram:
        table, draws = build_table_with_draws(r_lowers, betas, args.n_sims, args.steps, args.seed,
                                              workers=args.workers, progress=progress_enabled())
        sup_histogram(draws, r_lowers, bins=args.bins).to_csv(args.histogram, index=False, lineterminator="\n")
        logger.info("Wrote sup-statistic histogram to %s", args.histogram)
    else:
        table = build_table(r_lowers, betas, args.n_sims, args.steps, args.seed,
                            workers=args.workers, progress=progress_enabled())
    save_table(table, target)


def cmd_simulate(args: argparse.Namespace) -> None:
    """
    Run the coverage study described by the preset, with flags taking precedence.
    """
    try:
        config = load_config(args.config)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from exc
    selection_cfg = config.get("selection", {})
    try:
        selection = SelectionConfig(**selection_cfg)
    except TypeError as exc:
        raise ConfigurationError(f"Unknown selection setting in the preset: {exc}") from exc
    grid = config.get("grid")
    if not grid:
        logger.info("The preset has no grid; using the desk-scale grid")
        grid = DESK_GRID
    methods = args.methods or config.get("methods", ",".join(INDEX_METHODS + QUANTILE_METHODS))
    n_reps = args.reps if args.reps is not None else int(config.get("n_reps", 500))
    p = args.p if args.p is not None else float(config.get("p", DEFAULT_P))
    r_lower = args.r_lower if args.r_lower is not None else str(config.get("r_lower", DEFAULT_R_LOWER))
    beta = args.beta if args.beta is not None else float(config.get("beta", DEFAULT_BETA))

    result = run_study(grid, methods, n_reps, p=p, master_seed=args.seed, r_lower=r_lower, beta=beta,
                       cv_table=load_default_table(args.cv_table or CV_TABLE_PATH), selection=selection,
                       workers=args.workers, progress=progress_enabled())
    frame = result.to_frame()
    if args.format == "json":
        report = {"command": "simulate", "master_seed": args.seed, "n_reps": n_reps, "p": p,
                  "r_lower": r_lower, "beta": beta,
                  "cells": json.loads(frame.to_json(orient="records"))}
        _emit(report, [], args)
    elif args.output:
        result.write_csv(args.output)
    else:
        sys.stdout.write(frame.to_csv(index=False, float_format="%.6f", lineterminator="\n"))


def _global_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=SEED, help="master seed (HONEST_TAIL_SEED)")
    parent.add_argument("--input", help="CSV file with the observations")
    parent.add_argument("--column", help="header name or zero-based position of the data column")
    parent.add_argument("--output", help="write the report here instead of stdout")
    parent.add_argument("--format", choices=["json", "csv"], default="json")
    parent.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR (HONEST_TAIL_LOG_LEVEL)")
    parent.add_argument("--workers", type=int, default=WORKERS, help="worker processes (HONEST_TAIL_WORKERS)")
    return parent


def _sample_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scale", type=float, default=1.0, help="multiply every observation first")
    parser.add_argument("--k", type=int, help="threshold; chosen from the data when omitted")
    parser.add_argument("--c-crit", type=float, default=1.25)
    parser.add_argument("--k-min-frac", type=float, default=0.01)
    parser.add_argument("--k-max-frac", type=float, default=0.99)


def _interval_flags(parser: argparse.ArgumentParser, methods: Sequence[str]) -> None:
    _sample_flags(parser)
    parser.add_argument("--methods", default=",".join(methods),
                        help="; ".join(f"{m}: {METHOD_DESCRIPTIONS[m]}" for m in methods))
    parser.add_argument("--beta", type=float, default=DEFAULT_BETA)
    parser.add_argument("--r-lower", default=DEFAULT_R_LOWER, help="lower end of the snooping range, e.g. 1/2")
    parser.add_argument("--A", type=float, help="bias scale; use with --rho for a fixed budget")
    parser.add_argument("--rho", type=float, help="bias decay rate; use with --A")
    parser.add_argument("--rule-of-thumb", action="store_true", help="budget rho = 2 xi_hat, A = 0.1 xi_hat (1 + 2 xi_hat) sqrt(k)")
    parser.add_argument("--cv-table", help="critical-value table (HONEST_TAIL_CV_TABLE)")


def build_parser() -> argparse.ArgumentParser:
    parent = _global_flags()
    parser = argparse.ArgumentParser(description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    estimate = commands.add_parser("estimate", parents=[parent], help="Hill and Weissman estimates")
    _sample_flags(estimate)
    estimate.add_argument("--p", type=float, help="also estimate the (1-p)-quantile")
    estimate.add_argument("--path", action="store_true", help="include the Hill path")
    estimate.add_argument("--k-lo", type=int, default=1)
    estimate.add_argument("--k-hi", type=int)
    estimate.add_argument("--cutoff", type=float, help="left-tail mode: analyse T - B for B < T")
    estimate.set_defaults(handler=cmd_estimate)

    select = commands.add_parser("select-k", parents=[parent], help="data-driven threshold with its criterion trace")
    _sample_flags(select)
    select.add_argument("--cutoff", type=float)
    select.set_defaults(handler=cmd_select_k)

    ci = commands.add_parser("ci", parents=[parent], help="tail-index intervals")
    _interval_flags(ci, INDEX_METHODS)
    ci.add_argument("--cutoff", type=float)
    ci.set_defaults(handler=cmd_ci, p=None)

    qci = commands.add_parser("quantile-ci", parents=[parent], help="extreme-quantile intervals")
    _interval_flags(qci, QUANTILE_METHODS)
    qci.add_argument("--p", type=float, required=True)
    qci.add_argument("--cutoff", type=float)
    qci.set_defaults(handler=cmd_quantile_ci)

    table = commands.add_parser("cv-table", parents=[parent], help="simulate the critical-value table")
    table.add_argument("--r-lowers", default=",".join(R_LOWERS))
    table.add_argument("--betas", default=",".join(f"{b:g}" for b in BETAS))
    table.add_argument("--n-sims", type=int, default=DEFAULT_N_SIMS)
    table.add_argument("--steps", type=int, default=DEFAULT_N_STEPS)
    table.add_argument("--histogram", help="also write a sup-statistic histogram CSV here")
    table.add_argument("--bins", type=int, default=50)
    table.set_defaults(handler=cmd_cv_table)

    simulate = commands.add_parser("simulate", parents=[parent], help="Monte Carlo coverage study")
    simulate.add_argument("--config", help="study preset (HONEST_TAIL_STUDY_CONFIG)")
    simulate.add_argument("--methods")
    simulate.add_argument("--reps", type=int)
    simulate.add_argument("--p", type=float)
    simulate.add_argument("--r-lower")
    simulate.add_argument("--beta", type=float)
    simulate.add_argument("--cv-table")
    simulate.set_defaults(handler=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse the command line, run one command and map library errors to exit codes.

    :param argv: Arguments without the program name; sys.argv[1:] when None.
    :return: Process exit code
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        args.handler(args)
    except HonestTailError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
