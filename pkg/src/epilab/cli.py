"""Command-line entry point: ``epilab <subcommand> [options]``.

Exit codes: 0 pass, 1 violation, 2 numerical failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import DEFAULT_SEED, bundled_config_path, load_config
from .distributions import GaussianND, Laplace1D, moments
from .errors import ConfigError, EpilabError, HeavyTail, NonSmoothDensity
from .extensions.costa import COSTA_GRID, costa_concavity
from .extensions.liu_viswanath import LVProblemSpec, lv_solve
from .functionals import entropy, entropy_power, fisher_info
from .paths import REPRESENTATIONS, SLOPE_T_GRID, entropy_via_path, mutual_info_curve, small_snr_slope
from .runner import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PASS, run
from .serialize import from_dict

log = logging.getLogger("epilab")

FIG3_POINTS = 26
FIG3_T_MAX = 0.5
FIG3_COLUMNS = ("channel", "t", "mutual_info_nats", "fitted_slope")


# ----------------------------------------------------------------------
# figure data


def fig3_data(path, *, slope_grid=SLOPE_T_GRID) -> list[dict]:
    """I(X; sqrt(t) X + Z) for unit-variance Gaussian X over Gaussian and Laplacian
    noise channels, 26 points on [0, 0.5], with the fitted small-SNR slope."""
    x = GaussianND([0.0], [[1.0]])
    channels = {"gaussian": GaussianND([0.0], [[1.0]]), "laplacian": Laplace1D(0.0, 2**-0.5)}
    grid = np.linspace(0.0, FIG3_T_MAX, FIG3_POINTS)
    rows = []
    for name, z in channels.items():
        slope = small_snr_slope(z, x, slope_grid).value
        for t, value, _ in mutual_info_curve(z, x, grid):
            rows.append({"channel": name, "t": t, "mutual_info_nats": value, "fitted_slope": slope})
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(FIG3_COLUMNS)
        for r in rows:
            w.writerow([r["channel"], f"{r['t']:.17g}", f"{r['mutual_info_nats']:.17g}", f"{r['fitted_slope']:.17g}"])
    return rows


# ----------------------------------------------------------------------
# helpers


def _json_arg(text: str, what: str):
    """Inline JSON, or @path to a JSON file."""
    try:
        if text.startswith("@"):
            return json.loads(Path(text[1:]).read_text())
        return json.loads(text)
    except OSError as exc:
        raise ConfigError(f"cannot read {what}: {exc.strerror}", text[1:]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} is not valid JSON: {exc.msg}", f"line {exc.lineno}, column {exc.colno}") from exc


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def _emit(doc, out):
    text = json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------
# subcommands


def cmd_eval(args) -> int:
    dist = from_dict(_json_arg(args.dist, "--dist"), "--dist")
    h = entropy(dist)
    doc = {"dim": dist.dim, "entropy_nats": h.nats, "entropy_error": h.error_estimate, "entropy_method": h.method}
    p = entropy_power(dist, h)
    doc["entropy_power"] = p.value
    try:
        mean, cov = moments(dist)
        doc["mean"], doc["cov"] = mean, cov
    except HeavyTail as exc:
        doc["moments"] = f"unavailable: {exc}"
    try:
        j = fisher_info(dist)
        doc.update(fisher=j.scalar, fisher_matrix=j.matrix, fisher_error=j.error_estimate, fisher_method=j.method)
    except NonSmoothDensity as exc:
        doc["fisher"] = f"unavailable: {exc}"
    _emit(doc, args.out)
    return EXIT_PASS


def _config_from_args(args, default_name=None):
    if args.config:
        return load_config(args.config, default_seed=args.seed)
    if default_name is None:
        raise ConfigError("--config is required")
    return load_config(bundled_config_path(default_name), default_seed=args.seed)


def _run_config(cfg, args) -> int:
    """Report path: --out, else the configured path (relative to the config file,
    or to the working directory for bundled configurations)."""
    out = args.out
    if out is None and cfg.output.path is not None:
        out = Path(cfg.output.path)
        if args.config and not out.is_absolute():
            out = Path(args.config).resolve().parent / out
    fmt = args.format
    if fmt is None and out is not None and Path(out).suffix in (".json", ".csv"):
        fmt = Path(out).suffix[1:]
    summary, _ = run(cfg, jobs=args.jobs, out=out, fmt=fmt)
    sys.stderr.write(f"total {summary.total}: {summary.holds} hold, {summary.equalities} equality, "
                     f"{summary.violations} violated, {summary.numerical_failures} numerical failures "
                     f"({summary.wall_time_s:.1f} s)\n")
    return summary.exit_code


def cmd_verify(args) -> int:
    return _run_config(_config_from_args(args), args)


def cmd_suite(args) -> int:
    if args.config:
        return _run_config(_config_from_args(args), args)
    cfg = load_config(bundled_config_path(args.name), default_seed=args.seed)
    return _run_config(cfg, args)


def cmd_path(args) -> int:
    dist = from_dict(_json_arg(args.dist, "--dist"), "--dist")
    reps = args.representation or list(REPRESENTATIONS)
    direct = entropy(dist)
    rows = []
    for rep in reps:
        est = entropy_via_path(dist, rep, args.truncation)
        rows.append({"representation": rep, "entropy_nats": est.entropy_nats, "error_estimate": est.error_estimate,
                     "direct_entropy_nats": direct.nats, "difference": est.entropy_nats - direct.nats,
                     "grid_points": len(est.t_grid)})
        if args.verbose:
            rows[-1]["records"] = [{"t": r.t, "value": r.value, "integrand": r.integrand} for r in est.records]
    _emit({"paths": rows}, args.out)
    return EXIT_PASS


def cmd_costa(args) -> int:
    dist = from_dict(_json_arg(args.dist, "--dist"), "--dist")
    grid = [float(v) for v in args.grid.split(",")] if args.grid else COSTA_GRID
    res = costa_concavity(dist, None, grid)
    r = res.report
    _emit({"t_grid": res.t_grid, "N_values": res.N_values, "second_differences": res.second_differences,
           "slopes": res.slopes, "slopes_nonincreasing": res.slopes_nonincreasing,
           "shannon_slack": res.shannon_slack, "verdict": r.verdict, "worst_second_difference": r.lhs,
           "tolerance": r.tolerance}, args.out)
    return 1 if r.verdict == "violated" or not res.slopes_nonincreasing else EXIT_PASS


def cmd_lv(args) -> int:
    cap = np.atleast_2d(np.asarray(_json_arg(args.cap, "--cap"), dtype=float))
    noise = np.atleast_2d(np.asarray(_json_arg(args.noise_cov, "--noise-cov"), dtype=float))
    try:
        spec = LVProblemSpec(cap, noise, args.mu)
    except (ValueError, EpilabError) as exc:
        raise ConfigError(str(exc), "lv") from exc
    sol = lv_solve(spec, verbose=args.verbose)
    doc = {"cov": sol.cov, "multiplier": sol.multiplier, "kkt_residual": sol.kkt_residual,
           "slackness": sol.slackness, "objective": sol.objective}
    if args.verbose:
        doc["trace"] = sol.trace
    _emit(doc, args.out)
    return EXIT_PASS


def cmd_fig3(args) -> int:
    out = args.out or "fig3.csv"
    rows = fig3_data(out)
    slopes = {r["channel"]: r["fitted_slope"] for r in rows}
    sys.stderr.write(f"wrote {len(rows)} rows to {out}; fitted slopes "
                     + ", ".join(f"{k} {v:.4f}" for k, v in slopes.items()) + "\n")
    return EXIT_PASS


# ----------------------------------------------------------------------
# parser


def _global_flags(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="experiment configuration (JSON)")
    p.add_argument("--out", default=d(None), help="output file")
    p.add_argument("--seed", type=int, default=d(DEFAULT_SEED), help="default seed for experiments without one")
    p.add_argument("--tol-scale", type=float, default=d(None), help="multiply every tolerance (sets EPILAB_TOL_SCALE)")
    p.add_argument("--jobs", type=int, default=d(None), help="worker processes (default: hardware threads)")
    p.add_argument("--verbose", "-v", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epilab", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("eval", cmd_eval, "entropy, entropy power, moments and Fisher information of a distribution")
    p.add_argument("--dist", required=True, help="distribution JSON (inline or @file)")
    p = add("verify", cmd_verify, "run an experiment configuration")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p = add("suite", cmd_suite, "run a bundled configuration")
    p.add_argument("--name", default="suite-core", help="bundled configuration name")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p = add("path", cmd_path, "entropy through the path-integral representations")
    p.add_argument("--dist", required=True)
    p.add_argument("--representation", action="append", choices=REPRESENTATIONS)
    p.add_argument("--truncation", type=float, default=1e3)
    p = add("costa", cmd_costa, "entropy-power concavity along Gaussian perturbations")
    p.add_argument("--dist", required=True)
    p.add_argument("--grid", help="comma-separated t values")
    p = add("lv", cmd_lv, "covariance-constrained maximizer and KKT multiplier")
    p.add_argument("--cap", required=True, help="covariance cap C (JSON matrix)")
    p.add_argument("--noise-cov", required=True, help="noise covariance (JSON matrix)")
    p.add_argument("--mu", type=float, required=True)
    add("fig3", cmd_fig3, "small-SNR mutual information curves (CSV)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.tol_scale is not None:
        if not args.tol_scale > 0:
            sys.stderr.write("error: --tol-scale must be positive\n")
            return EXIT_CONFIG
        os.environ["EPILAB_TOL_SCALE"] = repr(args.tol_scale)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except (EpilabError, ArithmeticError) as exc:
        sys.stderr.write(f"numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
