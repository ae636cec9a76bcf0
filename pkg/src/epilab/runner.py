"""Execute experiment configurations and write JSON/CSV report files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .channel import complementary_residual
from .config import Experiment, ExperimentConfig
from .distributions import GaussianND
from .errors import ConfigError, EpilabError
from .extensions.costa import costa_concavity
from .extensions.dependent import DEFAULT_T_GRID, DependentPairSpec, check_dependent_epi
from .extensions.liu_viswanath import check_lv_epi
from .extensions.subsets import check_gas_mixture, check_subset_epi
from .extensions.zamir_feder import LinearMixSpec, check_zf_epi, check_zf_fii, check_zf_mii
from .inequalities import (
    EPI_FORMS,
    FII_FORMS,
    SATO_MC_SAMPLES,
    GaussianChain,
    InequalityReport,
    WeightedFamily,
    check_contrast,
    check_cramer_rao,
    check_dpi,
    check_epi,
    check_fii,
    check_mii,
    check_mii_rewritten,
    check_saddlepoint,
    check_sato,
    make_report,
    tol_scale,
)
from .paths import debruijn_residual

log = logging.getLogger(__name__)

REPORT_SCHEMA = "epilab-report/1"
# fixed column order of CSV files and JSON records
FIELDS = ("name", "paper_ref", "lhs", "rhs", "slack", "tolerance", "verdict", "error_estimate",
          "inputs_digest", "seed", "wall_time_ms", "experiment", "label", "kind", "method",
          "equality_expected", "message")
FAILURE = "numerical-failure"
IDENTITY_TOL = 1e-3

EXIT_PASS, EXIT_VIOLATION, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2, 3


@dataclass(frozen=True)
class RunSummary:
    total: int = 0
    holds: int = 0
    equalities: int = 0
    violations: int = 0
    numerical_failures: int = 0
    wall_time_s: float = 0.0

    @property
    def exit_code(self) -> int:
        if self.violations:
            return EXIT_VIOLATION
        if self.numerical_failures:
            return EXIT_NUMERICAL
        return EXIT_PASS


# ----------------------------------------------------------------------
# one function per experiment kind


def _white(n, var=1.0):
    return GaussianND(np.zeros(n), var * np.eye(n))


def _family(inp):
    return WeightedFamily(inp["dists"], inp["coeffs"])


def _run_epi(exp):
    fam = _family(exp.inputs)
    return [check_epi(fam, f) for f in exp.inputs.get("forms", EPI_FORMS)]


def _run_fii(exp):
    fam = _family(exp.inputs)
    return [check_fii(fam, f) for f in exp.inputs.get("forms", FII_FORMS)]


def _run_mii(exp):
    fam = _family(exp.inputs)
    z = exp.inputs.get("noise_dist") or _white(fam.dim)
    core = z.impl
    return [check_mii(fam, GaussianND(core.mean, t * core.cov)) for t in exp.grids.get("t", [1.0])]


def _run_sato(exp):
    return [check_sato(exp.inputs["dists"], exp.inputs["noise_dist"], seed=exp.seed,
                       samples=int(exp.inputs.get("samples", SATO_MC_SAMPLES)))]


def _run_dpi(exp):
    inp = exp.inputs
    return list(check_dpi(GaussianChain(inp["prior_dist"], inp["noise1_cov"], inp["matrix"], inp["noise2_cov"])))


def _run_complementary(exp):
    x = exp.inputs["dist"]
    out = []
    for s in exp.grids.get("noise_var", [1.0]):
        r = complementary_residual(x, s)
        out.append(make_report("complementary-relation", r.value + x.dim, float(x.dim), "eq", r.error_estimate,
                               {"dist": x, "noise_var": s},
                               reference="Fisher information and MMSE complementary relation",
                               method=r.method, equality_expected=True, floor=IDENTITY_TOL))
    return out


def _run_debruijn(exp):
    x, z = exp.inputs["dist"], exp.inputs["noise_dist"]
    out = []
    for t in exp.grids.get("t", [0.0]):
        r = debruijn_residual(x, z, t)
        out.append(make_report("de-bruijn", r.value, 0.0, "eq", r.error_estimate, {"dist": x, "noise": z, "t": t},
                               reference="de Bruijn's identity", method=r.method, equality_expected=True,
                               floor=IDENTITY_TOL))
    return out


def _mix(inp):
    return LinearMixSpec(inp["matrix"], inp["marginal_dists"])


def _run_dependent(exp):
    inp = exp.inputs
    spec = DependentPairSpec(inp["joint_dist"], float(inp.get("t", 1.0)),
                             tuple(inp.get("coeffs", (2**-0.5, 2**-0.5))))
    return [check_dependent_epi(spec, t_grid=tuple(exp.grids.get("t", DEFAULT_T_GRID)))]


def _run_costa(exp):
    inp = exp.inputs
    kw = {"t_grid": exp.grids["t"]} if "t" in exp.grids else {}
    return [costa_concavity(inp["dist"], inp.get("noise_dist"), **kw).report]


def _run_subset(exp):
    inp = exp.inputs
    return [check_subset_epi(inp["dists"], inp["coeffs"], inp["subsets"], f, inp.get("noise_dist"))
            for f in inp.get("forms", ["concavity"])]


RUNNERS = {
    "epi": _run_epi,
    "fii": _run_fii,
    "mii": _run_mii,
    "mii-rewritten": lambda e: [check_mii_rewritten(_family(e.inputs), e.inputs["noise_dist"])],
    "cramer-rao": lambda e: [check_cramer_rao(e.inputs["dist"])],
    "sato": _run_sato,
    "dpi": _run_dpi,
    "saddlepoint": lambda e: [check_saddlepoint(e.inputs["dist"], e.inputs["noise_dist"])],
    "contrast": lambda e: [check_contrast(_family(e.inputs))],
    "complementary": _run_complementary,
    "debruijn": _run_debruijn,
    "zf-epi": lambda e: [check_zf_epi(_mix(e.inputs), f) for f in e.inputs.get("forms", ["concavity"])],
    "zf-fii": lambda e: [check_zf_fii(_mix(e.inputs))],
    "zf-mii": lambda e: [check_zf_mii(_mix(e.inputs))],
    "dependent-epi": _run_dependent,
    "lv-epi": lambda e: [check_lv_epi(e.inputs["x1_dist"], e.inputs["x2_dist"],
                                      e.inputs.get("a", (2**-0.5, 2**-0.5)), float(e.inputs.get("alpha", 1.0)))],
    "costa": _run_costa,
    "subset-epi": _run_subset,
    "gas-mixture": lambda e: check_gas_mixture(e.inputs["weights"], e.inputs["dists"], e.inputs.get("noise_dist")),
}


# ----------------------------------------------------------------------
# post-processing of reports


def _verdict(slack, tol):
    if slack < -tol:
        return "violated"
    return "equality" if abs(slack) <= tol else "holds"


def adjust(report: InequalityReport, exp: Experiment) -> InequalityReport:
    """Apply per-experiment tolerance overrides and the reversed-claim negative control."""
    tol = report.tolerance * exp.tolerances.get("scale", 1.0)
    if "floor" in exp.tolerances:
        tol = max(tol, exp.tolerances["floor"] * tol_scale())
    lhs, rhs, slack = report.lhs, report.rhs, report.slack
    name = report.name
    if exp.claim == "reversed":
        slack = -slack
        lhs, rhs = rhs, lhs
        name = f"{name} (reversed)"
    return replace(report, name=name, lhs=lhs, rhs=rhs, slack=slack, tolerance=tol, verdict=_verdict(slack, tol))


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _record(report: InequalityReport | None, exp: Experiment, index: int, wall_ms: float, message: str = ""):
    base = {"seed": exp.seed, "wall_time_ms": round(wall_ms, 3), "experiment": index, "label": exp.label,
            "kind": exp.kind, "message": message}
    if report is None:
        return {"name": exp.kind, "paper_ref": "", "lhs": None, "rhs": None, "slack": None, "tolerance": None,
                "verdict": FAILURE, "error_estimate": None, "inputs_digest": "", "method": "",
                "equality_expected": None, **base}
    return {"name": report.name, "paper_ref": report.reference, "lhs": _finite(report.lhs),
            "rhs": _finite(report.rhs), "slack": _finite(report.slack), "tolerance": report.tolerance,
            "verdict": report.verdict, "error_estimate": _finite(report.error_estimate),
            "inputs_digest": report.inputs_digest, "method": report.method,
            "equality_expected": report.equality_expected, **base}


def run_experiment(exp: Experiment, index: int = 0) -> list[dict]:
    """Records for one experiment; library errors become numerical-failure records."""
    start = time.perf_counter()
    try:
        reports = [adjust(r, exp) for r in RUNNERS[exp.kind](exp)]
    except (EpilabError, ArithmeticError, ValueError, NotImplementedError) as exc:
        wall = 1e3 * (time.perf_counter() - start)
        log.warning("experiment %d (%s) failed: %s: %s", index, exp.kind, type(exc).__name__, exc)
        return [_record(None, exp, index, wall, f"{type(exc).__name__}: {exc}")]
    wall = 1e3 * (time.perf_counter() - start)
    for r in reports:
        log.info("experiment %d %s: %s (slack %.3g, tolerance %.3g)", index, r.name, r.verdict, r.slack, r.tolerance)
    return [_record(r, exp, index, wall) for r in reports]


def _star(args):
    return run_experiment(*args)


def default_jobs() -> int:
    return os.cpu_count() or 1


def run(config: ExperimentConfig, *, jobs: int | None = None, out: str | Path | None = None,
        fmt: str | None = None) -> tuple[RunSummary, list[dict]]:
    """Run every experiment, write the report file (if a path is known) and summarize."""
    start = time.perf_counter()
    jobs = max(1, min(jobs or default_jobs(), max(1, len(config.experiments))))
    work = [(e, i) for i, e in enumerate(config.experiments)]
    if jobs == 1 or len(work) <= 1:
        chunks = [_star(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_star, work))
    records = [r for chunk in chunks for r in chunk]
    summary = summarize(records, time.perf_counter() - start)
    path = out if out is not None else config.output.path
    if path is not None:
        write_report(records, summary, path, fmt or config.output.format)
    return summary, records


def summarize(records: list[dict], wall_time_s: float = 0.0) -> RunSummary:
    verdicts = [r["verdict"] for r in records]
    return RunSummary(len(records), verdicts.count("holds"), verdicts.count("equality"),
                      verdicts.count("violated"), verdicts.count(FAILURE), wall_time_s)


def to_json(records: list[dict], summary: RunSummary) -> str:
    doc = {"schema": REPORT_SCHEMA, "summary": asdict(summary), "records": records}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def to_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    w.writerow(FIELDS)
    for r in records:
        w.writerow([_cell(r.get(k)) for k in FIELDS])
    return buf.getvalue()


def write_report(records: list[dict], summary: RunSummary, path: str | Path, fmt: str = "json") -> Path:
    p = Path(path)
    if fmt not in ("json", "csv"):
        raise ConfigError(f"unknown output format {fmt!r}")
    p.parent.mkdir(parents=True, exist_ok=True)
    text = to_json(records, summary) if fmt == "json" else to_csv(records)
    p.write_text(text, newline="" if fmt == "csv" else None)
    return p


__all__ = ["REPORT_SCHEMA", "FIELDS", "RunSummary", "RUNNERS", "adjust", "run_experiment", "run", "summarize",
           "to_json", "to_csv", "write_report", "EXIT_PASS", "EXIT_VIOLATION", "EXIT_NUMERICAL", "EXIT_CONFIG"]
