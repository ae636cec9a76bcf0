"""Acceptance criteria, one test each.

Every test appends a PASS/FAIL line (with the measured quantity and runtime)
to ``LINES``; conftest prints them in the terminal summary.  Running this
file directly prints the same lines.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from conftest import gauss, laplace, mixture
from epilab.channel import complementary_residual
from epilab.cli import fig3_data, main
from epilab.distributions import GaussianND, GaussianSmoothed, Laplace1D, MixtureND, Uniform1D
from epilab.extensions.costa import costa_concavity
from epilab.extensions.dependent import DependentPairSpec, dependent_condition, gaussian_gap_top_left, random_joint
from epilab.extensions.liu_viswanath import LVProblemSpec, grid_search_scalar, lv_solve
from epilab.extensions.subsets import SUBSET_FORMS, balance, check_gas_mixture, check_subset_epi, leave_one_out
from epilab.extensions.zamir_feder import (ZF_EPI_FORMS, LinearMixSpec, check_zf_epi, check_zf_fii,
                                           random_orthonormal_rows)
from epilab.functionals import entropy
from epilab.inequalities import (EPI_FORMS, FII_FORMS, GaussianChain, WeightedFamily, check_contrast,
                                 check_cramer_rao, check_dpi, check_epi, check_fii, check_mii, check_saddlepoint,
                                 check_sato)
from epilab.paths import REPRESENTATIONS, debruijn_residual, entropy_via_path
import oracles

LINES: list[str] = []
SEED = 20240601


def record(number, title, ok, detail, elapsed, budget):
    within = budget is None or elapsed <= budget
    status = "PASS" if ok and within else "FAIL"
    timing = f"{elapsed:.1f} s" + ("" if budget is None else f" (budget {budget:g} s)")
    LINES.append(f"criterion {number:>2} {status}  {title}: {detail}; {timing}")
    return ok and within


# ----------------------------------------------------------------------
# random members of the supported scalar families


def random_law(rng, kinds=("gaussian", "laplace", "mixture", "smoothed-uniform")):
    kind = kinds[rng.integers(len(kinds))]
    var = rng.uniform(0.3, 3.0)
    loc = rng.uniform(-1.0, 1.0)
    if kind == "gaussian":
        return GaussianND([loc], [[var]])
    if kind == "laplace":
        return Laplace1D(loc, math.sqrt(var / 2))
    if kind == "mixture":
        w = rng.uniform(0.2, 0.8)
        sep = rng.uniform(0.5, 2.5)
        return MixtureND([w, 1 - w], [GaussianND([-sep], [[rng.uniform(0.4, 1.5)]]),
                                      GaussianND([sep], [[rng.uniform(0.4, 1.5)]])])
    width = rng.uniform(0.5, 3.0)
    return GaussianSmoothed(Uniform1D(-width / 2, width / 2), rng.uniform(0.05, 0.5), [[1.0]])


def random_coeffs(rng, k):
    while True:
        a = rng.uniform(-2, 2, k)
        if np.min(np.abs(a)) > 0.05:
            return a


NON_GAUSSIAN = ("laplace", "mixture", "smoothed-uniform")


# ----------------------------------------------------------------------
# criteria


def test_criterion_01_small_snr_slopes(tmp_path):
    t0 = time.perf_counter()
    rows = fig3_data(tmp_path / "fig3.csv")
    slopes = {r["channel"]: r["fitted_slope"] for r in rows}
    ok = abs(slopes["gaussian"] - 0.5) <= 0.025 and abs(slopes["laplacian"] - 1.0) <= 0.05
    detail = f"Gaussian noise slope {slopes['gaussian']:.6f} (0.5 +- 0.025), Laplacian {slopes['laplacian']:.6f} (1 +- 0.05)"
    assert record(1, "small-SNR slopes", ok, detail, time.perf_counter() - t0, 30)


def test_criterion_02_complementary_relation():
    t0 = time.perf_counter()
    worst = 0.0
    for make, var in itertools.product((gauss, laplace, mixture), (0.5, 1.0, 2.0)):
        worst = max(worst, abs(float(complementary_residual(make(), var).value)))
    ok = worst <= 1e-3
    assert record(2, "complementary relation", ok, f"max |residual| {worst:.3e} over 9 cases (<= 1e-3)",
                  time.perf_counter() - t0, 60)


def test_criterion_03_debruijn_residual():
    t0 = time.perf_counter()
    worst = 0.0
    for make, t in itertools.product((gauss, laplace, mixture), (0.0, 0.5, 1.0, 2.0)):
        worst = max(worst, abs(float(debruijn_residual(make(), gauss(), t).value)))
    off = abs(float(debruijn_residual(gauss(), laplace(), 0.0).value))
    ok = max(worst, off) <= 1e-3
    detail = f"max |residual| {worst:.3e} (Gaussian Z, 12 cases), {off:.3e} (Laplace Z at t=0) (<= 1e-3)"
    assert record(3, "de Bruijn residual", ok, detail, time.perf_counter() - t0, 60)


def test_criterion_04_integral_representations():
    t0 = time.perf_counter()
    worst_direct, worst_pair = 0.0, 0.0
    for make in (laplace, mixture):
        x = make()
        direct = entropy(x).nats
        ests = [entropy_via_path(x, r).entropy_nats for r in REPRESENTATIONS]
        worst_direct = max(worst_direct, max(abs(e - direct) for e in ests))
        worst_pair = max(worst_pair, max(abs(a - b) for a, b in itertools.combinations(ests, 2)))
    ok = worst_direct <= 1e-2 and worst_pair <= 1e-2
    detail = f"max deviation from direct entropy {worst_direct:.3e}, max pairwise {worst_pair:.3e} (<= 1e-2)"
    assert record(4, "integral representations", ok, detail, time.perf_counter() - t0, 120)


def _criterion5_reports(rng):
    reports = []
    families = []
    for _ in range(22):
        k = 2
        families.append(WeightedFamily(tuple(random_law(rng) for _ in range(k)), random_coeffs(rng, k)))
    for _ in range(4):
        v = rng.uniform(0.3, 3.0)
        families.append(WeightedFamily((GaussianND([rng.uniform(-1, 1)], [[v]]),
                                        GaussianND([rng.uniform(-1, 1)], [[v]])), random_coeffs(rng, 2)))
    for _ in range(2):
        families.append(WeightedFamily((GaussianND([0.0], [[rng.uniform(0.3, 1.0)]]),
                                        GaussianND([0.0], [[rng.uniform(1.5, 3.0)]])), random_coeffs(rng, 2)))
    for fam in families:
        reports += [check_epi(fam, f) for f in EPI_FORMS]
        reports += [check_fii(fam, f) for f in FII_FORMS]
    for fam in families[::2]:
        reports.append(check_mii(fam, GaussianND([0.0], [[rng.uniform(0.3, 3.0)]])))
        reports.append(check_contrast(fam))
    for _ in range(8):
        reports.append(check_sato([random_law(rng), gauss(rng.uniform(0.3, 3.0))], gauss(rng.uniform(0.3, 3.0))))
    reports.append(check_sato([random_law(rng, NON_GAUSSIAN), random_law(rng, ("mixture",))], gauss()))
    for _ in range(12):
        reports.append(check_cramer_rao(random_law(rng)))
    for _ in range(10):
        reports.append(check_saddlepoint(random_law(rng), gauss(rng.uniform(0.3, 3.0))))
    for _ in range(5):
        chain = GaussianChain(random_law(rng), [[rng.uniform(0.3, 2.0)]], [[rng.uniform(0.5, 2.0)]],
                              [[rng.uniform(0.0, 2.0)]])
        reports += list(check_dpi(chain))
    return reports


def test_criterion_05_inequality_suite():
    t0 = time.perf_counter()
    reports = _criterion5_reports(np.random.default_rng(SEED))
    violations = [r for r in reports if r.verdict == "violated"]
    mismatched = [r for r in reports if (r.verdict == "equality") != bool(r.equality_expected)]
    ok = len(reports) >= 200 and not violations and not mismatched
    detail = (f"{len(reports)} instances, {len(violations)} violations, "
              f"{sum(r.verdict == 'equality' for r in reports)} equality verdicts, "
              f"{len(mismatched)} equality verdicts off the predicted Gaussian cases")
    for r in (violations + mismatched)[:5]:
        detail += f" [{r.name} slack {r.slack:.3e} tol {r.tolerance:.1e}]"
    assert record(5, "inequality suite", ok, detail, time.perf_counter() - t0, 240)


def test_criterion_06_costa_concavity():
    t0 = time.perf_counter()
    g = costa_concavity(gauss())
    lin = max(abs(d) for d in g.second_differences)
    ok = lin <= 1e-10 and g.slopes_nonincreasing
    worst = -math.inf
    for make in (laplace, mixture):
        res = costa_concavity(make())
        worst = max(worst, max(res.second_differences))
        ok = ok and max(res.second_differences) <= 1e-4 and res.slopes_nonincreasing
    detail = f"Gaussian max |second difference| {lin:.2e} (<= 1e-10), non-Gaussian max {worst:.3e} (<= 1e-4)"
    assert record(6, "Costa concavity", ok, detail, time.perf_counter() - t0, 60)


def test_criterion_07_liu_viswanath():
    t0 = time.perf_counter()
    cov_dev, kkt = 0.0, 0.0
    for cap, var, mu in itertools.product((0.3, 1.0, 3.0), (0.5, 1.0, 2.0), (1.5, 2.0, 4.0)):
        sol = lv_solve(LVProblemSpec([[cap]], [[var]], mu))
        cov_dev = max(cov_dev, abs(sol.cov[0, 0] - grid_search_scalar(cap, var, mu)))
        kkt = max(kkt, sol.kkt_residual)
    caps, noises = np.array([0.4, 2.5, 1.0]), np.array([1.0, 0.5, 2.0])
    for mu in (1.5, 3.0):
        sol = lv_solve(LVProblemSpec(np.diag(caps), np.diag(noises), mu))
        expect = [grid_search_scalar(c, k, mu) for c, k in zip(caps, noises)]
        cov_dev = max(cov_dev, float(np.max(np.abs(sol.cov - np.diag(expect)))))
        kkt = max(kkt, sol.kkt_residual)
    free = 0.0
    k = np.array([[2.0, 0.3], [0.3, 1.0]])
    for mu in (1.5, 2.0, 4.0):
        sol = lv_solve(LVProblemSpec(100 * np.eye(2), k, mu))
        free = max(free, float(np.max(np.abs(sol.cov - k / (mu - 1)))))
        kkt = max(kkt, sol.kkt_residual)
    ok = cov_dev <= 1e-4 and kkt <= 1e-8 and free <= 1e-8
    detail = (f"max deviation from grid search {cov_dev:.2e} (<= 1e-4), KKT residual {kkt:.2e} (<= 1e-8), "
              f"unconstrained deviation {free:.2e} (<= 1e-8)")
    assert record(7, "covariance-constrained maximizer", ok, detail, time.perf_counter() - t0, 10)


def test_criterion_08_linear_transform_epi():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 8)
    shapes = [(1, 2), (1, 3), (2, 2), (2, 3)]
    violations, single_dev, count, fii = 0, 0.0, 0, 0
    for i in range(50):
        r, m = shapes[i % 4]
        a = random_orthonormal_rows(rng, r, m)
        margs = [random_law(rng, NON_GAUSSIAN) for _ in range(m)]
        spec = LinearMixSpec(a, margs)
        reports = [check_zf_epi(spec, f) for f in ZF_EPI_FORMS]
        if r == 1 or r == m:
            # dense two-row, three-column Fisher matrices take up to tens of seconds each; a unit test covers one
            reports.append(check_zf_fii(spec))
            fii += 1
        violations += sum(rep.verdict == "violated" for rep in reports)
        count += 1
        if r == 1:
            fam = WeightedFamily(tuple(margs), a[0])
            for zf_form, form in (("concavity", "concavity"), ("power", "power"), ("gaussian", "gaussian-comparison")):
                single_dev = max(single_dev, abs(check_zf_epi(spec, zf_form).slack - check_epi(fam, form).slack))
    ok = violations == 0 and single_dev <= 1e-10
    detail = (f"{count} matrices x 3 EPI forms (+ FII on {fii}), {violations} violations, "
              f"single-row deviation from plain EPI {single_dev:.2e} (<= 1e-10)")
    assert record(8, "linear-transform EPI", ok, detail, time.perf_counter() - t0, 120)


def test_criterion_09_dependent_variables():
    t0 = time.perf_counter()
    joint = GaussianND([0.0, 0.0], [[1.0, 0.5], [0.5, 1.0]])
    gap_dev, fails = 0.0, True
    for t in (0.5, 1.0, 2.0):
        res = dependent_condition(DependentPairSpec(joint, t))
        gap_dev = max(gap_dev, abs(res.matrix_gap[0, 0] - gaussian_gap_top_left(0.5, t)))
        fails = fails and not res.holds
    rng = np.random.default_rng(SEED + 9)
    broken = 0
    for _ in range(50):
        res = dependent_condition(DependentPairSpec(random_joint(rng), float(rng.uniform(0.2, 2.0))))
        broken += (res.holds and not res.takano_holds) or (res.takano_holds and not res.johnson_holds)
    ok = gap_dev <= 1e-8 and fails and broken == 0
    detail = (f"rho=0.5 fails the condition: {fails}, top-left gap deviation {gap_dev:.2e} (<= 1e-8), "
              f"ordering chain broken on {broken}/50 joints")
    assert record(9, "dependent variables", ok, detail, time.perf_counter() - t0, 60)


def test_criterion_10_mixtures_and_subsets():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 10)
    reports = []
    for i in range(25):
        dists = [random_law(rng) for _ in range(3)]
        if i % 2:
            coll = leave_one_out(3)
        else:
            coll, _ = balance([(0, 1), (1, 2)], 3)
        reports.append(check_subset_epi(dists, random_coeffs(rng, 3), coll, SUBSET_FORMS[i % 4]))
    for _ in range(25):
        k = int(rng.integers(2, 4))
        reports += check_gas_mixture(rng.dirichlet(np.ones(k)), [random_law(rng) for _ in range(k)])
    violations = sum(r.verdict == "violated" for r in reports)
    h = entropy(mixture()).nats
    golden_ok = abs(h - oracles.MIXTURE_ENTROPY_STATED) <= 1e-3
    ok = violations == 0 and golden_ok
    detail = (f"50 instances ({len(reports)} reports), {violations} violations; mixture entropy {h:.7f} vs stated "
              f"{oracles.MIXTURE_ENTROPY_STATED} (|diff| {abs(h - oracles.MIXTURE_ENTROPY_STATED):.4f}, <= 1e-3); "
              f"independent oracle {oracles.MIXTURE_ENTROPY:.7f} matched to {abs(h - oracles.MIXTURE_ENTROPY):.1e}")
    assert record(10, "gas mixtures and subset EPIs", ok, detail, time.perf_counter() - t0, 60)


def test_criterion_11_negative_control(tmp_path):
    t0 = time.perf_counter()
    out = tmp_path / "reversed.json"
    code = main(["suite", "--name", "reversed-epi", "--out", str(out)])
    violated = sum(r["verdict"] == "violated" for r in json.loads(out.read_text())["records"])
    ok = code == 1 and violated >= 1
    assert record(11, "negative control", ok, f"exit code {code} (expect 1), {violated} violated reports",
                  time.perf_counter() - t0, None)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:warnings"]))
