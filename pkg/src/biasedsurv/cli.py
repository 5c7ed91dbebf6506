"""Command-line front end.

Subcommands: ``estimate`` fits one method per dataset group and emits
(t, f_hat, F_hat, S_hat) grids; ``theta-profile`` emits the sieve
objective profile; ``simulate`` runs a configured experiment and emits
its report; ``synth`` writes a reproducible synthetic dataset.

Exit codes: 0 success, 2 input/configuration problem, 3 estimation or
experiment failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import BandwidthRule
from .dataio import (Dataset, fmt, generate_synthetic_dataset, grid_payload,
                     load_dataset, load_experiment_config, profile_payload,
                     report_payload, write_grid_csv, write_json_document,
                     write_profile_csv, write_report_csv)
from .errors import (ConfigurationError, DataFormatError, DomainError,
                     EstimationError, ExperimentError)
from .estimators import fit_density
from .km import km_cdf
from .model import EvaluationGrid, SelectionFamily
from .simulation import (METRIC_NAMES, run_band_experiment,
                         run_convergence_experiment)
from .theta import estimate_theta
from .tuning import CRITERIA, select_c

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ESTIMATION = 3

_INPUT_ERRORS = (DataFormatError, ConfigurationError, DomainError)
_ESTIMATION_ERRORS = (EstimationError, ExperimentError)


def _parse_theta(text: str) -> object:
    if text == "auto":
        return "auto"
    match = re.fullmatch(r"fixed=(.+)", text)
    if match:
        try:
            return float(match.group(1))
        except ValueError:
            raise ConfigurationError(
                f"--theta fixed value {match.group(1)!r} is not a number"
            ) from None
    raise ConfigurationError("--theta must be 'auto' or 'fixed=<value>'")


def _parse_c(text: str) -> object:
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise ConfigurationError(f"--c must be 'auto' or a number, got {text!r}") from None
    if value <= 0.0:
        raise ConfigurationError("--c must be positive")
    return value


def _safe_label(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", label)


def _group_path(out: str, label: str, many: bool) -> str:
    if not many:
        return out
    path = Path(out)
    return str(path.with_name(f"{path.stem}.{_safe_label(label)}{path.suffix}"))


def _select_groups(dataset: Dataset, requested: str):
    if requested == "all":
        return dataset.groups
    try:
        return ((requested, dataset.get(requested)),)
    except KeyError as exc:
        raise ConfigurationError(str(exc)) from exc


def _flag_meta(args: argparse.Namespace, names) -> dict:
    return {name: getattr(args, name.replace("-", "_")) for name in names}


def _km_grid_lines(sample):
    step = km_cdf(sample)
    cum = np.cumsum(step.jumps)
    lines = ["t,f_hat,F_hat,S_hat"]
    for t, jump, F in zip(step.knots, step.jumps, cum):
        lines.append(f"{fmt(t)},{fmt(jump)},{fmt(F)},{fmt(1.0 - F)}")
    return lines, step


def _fit_group(sample, args):
    """Resolve theta/c for one group and fit; returns (estimate, info)."""
    rule = BandwidthRule.parse(args.bandwidth)
    family = SelectionFamily()
    grid = EvaluationGrid.for_sample(sample, n=args.grid)
    method = args.method
    info = {"method": method, "n": sample.n,
            "n_uncensored": sample.n_uncensored}

    if method == "km":
        return None, info

    theta_flag = _parse_theta(args.theta)
    c_flag = _parse_c(args.c)
    cv = None if args.cv == "none" else args.cv
    if cv is not None and method not in ("wke", "tbe"):
        raise ConfigurationError("--cv applies only to wke and tbe")
    if cv is not None and theta_flag != "auto":
        raise ConfigurationError("--cv requires --theta auto")
    if cv is not None and c_flag != "auto":
        raise ConfigurationError("--cv selects c; drop --c or set it to auto")

    theta = None
    if method in ("wke", "tbe"):
        if theta_flag == "auto":
            objective = args.objective
            c = None
            if cv is not None:
                cv_report = select_c(sample, cv, method=method,
                                     bandwidth=rule, grid=grid,
                                     fast=not args.cv_exact)
                c = cv_report.c
                objective = "penalized"
                info["cv"] = {
                    "criterion": cv_report.criterion,
                    "direction": cv_report.direction,
                    "c": cv_report.c,
                    "candidates": [{"c": cc, "score": ss}
                                   for cc, ss in cv_report.candidates],
                }
            elif objective == "penalized":
                if c_flag == "auto":
                    raise ConfigurationError(
                        "--objective penalized needs --c <value> or --cv")
                c = c_flag
            fit = estimate_theta(sample, method=method, objective=objective,
                                 c=c, family=family, bandwidth=rule, grid=grid)
            theta = fit.theta_hat
            info.update(theta_hat=fit.theta_hat, objective=fit.objective,
                        c=fit.c, alpha=fit.alpha, at_boundary=fit.at_boundary)
        else:
            theta = float(theta_flag)
            info.update(theta_hat=theta, objective="fixed", c=0.0,
                        alpha=0.0, at_boundary=False)
    est = fit_density(sample, method, grid=grid, theta=theta,
                      family=family, bandwidth=rule)
    info.update(kappa_hat=est.kappa_hat, h=est.h)
    return est, info


def cmd_estimate(args) -> int:
    dataset = load_dataset(args.dataset)
    groups = _select_groups(dataset, args.group)
    many = len(groups) > 1
    meta = {
        "version": __version__,
        "command": "estimate",
        "dataset": args.dataset,
        "seed": args.seed,
        "flags": _flag_meta(args, ("method", "theta", "objective", "cv", "c",
                                   "bandwidth", "grid", "group", "format")),
    }
    json_groups = {}
    for label, sample in groups:
        est, info = _fit_group(sample, args)
        if args.format == "csv":
            path = _group_path(args.out, label, many)
            if est is None:
                lines, _ = _km_grid_lines(sample)
                with open(path, "w", newline="\n") as fh:
                    fh.write("\n".join(lines) + "\n")
            else:
                write_grid_csv(path, est)
            target = path
        else:
            if est is None:
                step = km_cdf(sample)
                cum = np.cumsum(step.jumps)
                info["grid"] = {"t": step.knots, "f_hat": step.jumps,
                                "F_hat": cum, "S_hat": 1.0 - cum}
            else:
                info["grid"] = grid_payload(est)
            json_groups[label] = info
            target = args.out
        summary = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                            for k, v in info.items()
                            if k in ("method", "theta_hat", "kappa_hat", "h",
                                     "c", "at_boundary", "n"))
        print(f"{label}: {summary} -> {target}")
    if args.format == "json":
        write_json_document(args.out, {"groups": json_groups}, meta)
    return EXIT_OK


def cmd_theta_profile(args) -> int:
    dataset = load_dataset(args.dataset)
    groups = _select_groups(dataset, args.group)
    many = len(groups) > 1
    rule = BandwidthRule.parse(args.bandwidth)
    c_flag = _parse_c(args.c)
    if args.objective == "penalized" and c_flag == "auto":
        raise ConfigurationError("--objective penalized needs --c <value>")
    meta = {
        "version": __version__,
        "command": "theta-profile",
        "dataset": args.dataset,
        "flags": _flag_meta(args, ("method", "objective", "c", "bandwidth",
                                   "grid", "group", "points", "format")),
    }
    json_groups = {}
    for label, sample in groups:
        grid = EvaluationGrid.for_sample(sample, n=args.grid)
        fit = estimate_theta(
            sample, method=args.method, objective=args.objective,
            c=None if args.objective == "pseudo" else c_flag,
            bandwidth=rule, grid=grid, coarse_points=args.points)
        if args.format == "csv":
            path = _group_path(args.out, label, many)
            write_profile_csv(path, fit)
            target = path
        else:
            json_groups[label] = profile_payload(fit)
            target = args.out
        print(f"{label}: theta_hat={fit.theta_hat:.6g} value={fit.value:.6g} "
              f"objective={fit.objective} at_boundary={fit.at_boundary} "
              f"-> {target}")
    if args.format == "json":
        write_json_document(args.out, {"groups": json_groups}, meta)
    return EXIT_OK


def cmd_simulate(args) -> int:
    kind, config = load_experiment_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        config = dataclasses.replace(config, **overrides)
    runner = run_convergence_experiment if kind == "convergence" \
        else run_band_experiment
    report = runner(config)
    meta = {
        "version": __version__,
        "command": "simulate",
        "config": args.config,
        "kind": kind,
        "seed": config.seed,
        "workers": config.workers,
    }
    if args.format == "csv":
        write_report_csv(args.out, report)
    else:
        write_json_document(args.out, report_payload(report), meta)

    if report.rows:
        header = f"{'N':>6} {'method':<10}" + "".join(
            f" {m + '_mean':>10} {m + '_sd':>10}" for m in METRIC_NAMES)
        print(header)
        seen = []
        for row in report.rows:
            key = (row.N, row.method)
            if key not in seen:
                seen.append(key)
        for N, method in seen:
            cells = ""
            for metric in METRIC_NAMES:
                mean, sd = report.metric(N, method, metric)
                cells += f" {mean:>10.4f} {sd:>10.4f}"
            print(f"{N:>6} {method:<10}" + cells)
    else:
        for band in report.bands:
            print(f"band {band.method}: grid={report.grid.size} points, "
                  f"width[{band.lower.size}] mean="
                  f"{float(np.mean(band.upper - band.lower)):.4f}")
    failed = sum(f.failed for f in report.failures)
    if failed:
        print(f"replication failures: {failed}")
    print(f"report -> {args.out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    labels = tuple(args.labels.split(","))
    sizes = tuple(int(s) for s in args.sizes.split(","))
    thetas = tuple(float(t) for t in args.thetas.split(","))
    dataset = generate_synthetic_dataset(
        path=args.out, seed=args.seed, labels=labels, sizes=sizes,
        thetas=thetas, censor_fraction=args.censor_fraction,
        mechanism=args.mechanism)
    for label, sample in dataset.groups:
        print(f"{label}: n={sample.n} events={sample.n_uncensored} "
              f"censored={sample.n - sample.n_uncensored}")
    print(f"dataset -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biasedsurv",
        description="Density and CDF estimation from biased, right-censored "
                    "survival samples.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit one method and emit a grid")
    est.add_argument("dataset")
    est.add_argument("--method", default="wke",
                     choices=("wke", "tbe", "jones", "naive", "km"))
    est.add_argument("--theta", default="auto",
                     help="'auto' (estimate) or 'fixed=<value>'")
    est.add_argument("--objective", default="pseudo",
                     choices=("pseudo", "penalized"))
    est.add_argument("--cv", default="none", choices=CRITERIA + ("none",))
    est.add_argument("--c", default="auto", help="'auto' or a positive number")
    est.add_argument("--bandwidth", default="dpi",
                     help="dpi, nrd, or fixed=<h>")
    est.add_argument("--grid", type=int, default=512,
                     help="number of grid points")
    est.add_argument("--group", default="all",
                     help="group label, or 'all' for every group")
    est.add_argument("--out", required=True)
    est.add_argument("--format", default="csv", choices=("csv", "json"))
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--cv-exact", action="store_true",
                     help="full-scan leave-one-out refits (slower)")
    est.set_defaults(func=cmd_estimate)

    prof = sub.add_parser("theta-profile",
                          help="emit the sieve objective over theta")
    prof.add_argument("dataset")
    prof.add_argument("--method", default="wke", choices=("wke", "tbe"))
    prof.add_argument("--objective", default="pseudo",
                      choices=("pseudo", "penalized"))
    prof.add_argument("--c", default="auto")
    prof.add_argument("--bandwidth", default="dpi")
    prof.add_argument("--grid", type=int, default=512)
    prof.add_argument("--points", type=int, default=61,
                      help="coarse scan points before refinement")
    prof.add_argument("--group", default="all")
    prof.add_argument("--out", required=True)
    prof.add_argument("--format", default="csv", choices=("csv", "json"))
    prof.set_defaults(func=cmd_theta_profile)

    sim = sub.add_parser("simulate", help="run a configured experiment")
    sim.add_argument("config")
    sim.add_argument("--out", required=True)
    sim.add_argument("--format", default="csv", choices=("csv", "json"))
    sim.add_argument("--seed", type=int, default=None,
                     help="override the config seed")
    sim.add_argument("--workers", type=int, default=None,
                     help="override the config worker count")
    sim.set_defaults(func=cmd_simulate)

    synth = sub.add_parser("synth", help="write a synthetic grouped dataset")
    synth.add_argument("--out", required=True)
    synth.add_argument("--seed", type=int, default=7)
    synth.add_argument("--labels", default="ALL,AML-low,AML-high")
    synth.add_argument("--sizes", default="38,54,45")
    synth.add_argument("--thetas", default="0.45,0.89,0.89")
    synth.add_argument("--censor-fraction", type=float, default=0.30)
    synth.add_argument("--mechanism", default="calibrated_independent",
                       choices=("calibrated_independent",
                                "literal_random_fraction"))
    synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _ESTIMATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
