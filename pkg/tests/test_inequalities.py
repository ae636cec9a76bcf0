import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import coefficient_pairs, gauss, laplace, mixture, near, scalar_laws, smoothed_uniform
from epilab.distributions import GaussianND
from epilab.errors import NonSmoothDensity
from epilab.distributions import Uniform1D
from epilab.inequalities import (EPI_FORMS, FII_FORMS, GaussianChain, WeightedFamily, check_contrast,
                                 check_cramer_rao, check_dpi, check_epi, check_fii, check_mii,
                                 check_mii_rewritten, check_saddlepoint, check_sato, epi_deficit,
                                 make_report, mii_gap, tolerance_for)
import oracles
from epilab import inequalities

HALF = (2**-0.5, 2**-0.5)


def fam(dists, coeffs=HALF):
    return WeightedFamily(tuple(dists), coeffs)


class TestReports:
    def test_verdicts(self):
        assert make_report("x", 1.0, 0.0, "ge", 0.0, {}).verdict == "holds"
        assert make_report("x", 0.0, 1.0, "ge", 0.0, {}).verdict == "violated"
        assert make_report("x", 1.0, 1.0 + 1e-7, "ge", 0.0, {}).verdict == "equality"
        assert make_report("x", 0.0, 1.0, "le", 0.0, {}).slack == 1.0

    def test_identity_direction(self):
        r = make_report("x", 2.0, 1.0, "eq", 0.0, {})
        assert r.slack == -1.0 and r.verdict == "violated"

    def test_tolerance_scaling(self, monkeypatch):
        monkeypatch.setenv("EPILAB_TOL_SCALE", "4")
        assert tolerance_for(1e-3) == pytest.approx(4e-2)
        assert tolerance_for(0.0) == pytest.approx(4e-5)

    def test_digest_stable(self):
        a = make_report("x", 1.0, 0.0, "ge", 0.0, {"d": laplace()})
        b = make_report("x", 1.0, 0.0, "ge", 0.0, {"d": laplace()})
        assert a.inputs_digest == b.inputs_digest


class TestEpi:
    @pytest.mark.parametrize("form", EPI_FORMS)
    def test_gaussian_equality(self, form):
        r = check_epi(fam([gauss(), gauss()]), form)
        assert r.verdict == "equality" and abs(r.slack) < 1e-12

    def test_laplace_gaussian_frozen(self):
        r = check_epi(fam([laplace(), gauss()]), "concavity")
        assert near(r.lhs, oracles.LAPLACE_GAUSS_SUM_ENTROPY, 1e-9)
        assert near(r.rhs, oracles.LAPLACE_GAUSS_CONCAVITY_RHS, 1e-12)
        assert near(r.slack, oracles.LAPLACE_GAUSS_CONCAVITY_SLACK, 1e-9)
        assert r.verdict == "holds"

    @pytest.mark.parametrize("form", EPI_FORMS)
    def test_single_term(self, form):
        r = check_epi(fam([laplace(), mixture()], (1.0, 0.0)), form)
        assert r.verdict == "equality"


class TestFii:
    @pytest.mark.parametrize("form", FII_FORMS)
    def test_gaussian_equality(self, form):
        assert check_fii(fam([gauss(), gauss()]), form).verdict == "equality"

    def test_laplace_pair(self):
        r = check_fii(fam([laplace(), laplace()]), "convexity")
        assert near(r.lhs, oracles.LAPLACE_PAIR_FISHER, 1e-8) and r.lhs < 2.0 and r.verdict == "holds"

    def test_smoothed_uniform_gaussian(self):
        r = check_fii(fam([smoothed_uniform(), gauss()]), "convexity")
        assert r.verdict == "holds" and r.slack > 0

    def test_rejects_jumps(self):
        with pytest.raises(NonSmoothDensity):
            check_fii(fam([Uniform1D(0, 1), gauss()]))


class TestMii:
    @pytest.mark.parametrize("a", [HALF, (0.6, 0.8), (1.0, 3.0)])
    def test_gaussian_equality(self, a):
        assert check_mii(fam([gauss(), gauss()], a), gauss()).verdict == "equality"

    def test_laplace_gaussian(self):
        r = check_mii(fam([laplace(), gauss()], (0.6, 0.8)), gauss())
        assert r.slack > 0 and r.verdict == "holds"

    def test_rewritten_reverses_with_laplace_noise(self):
        r = check_mii_rewritten(fam([gauss(), gauss()]), laplace())
        assert r.slack < 0 and r.verdict == "violated"

    def test_rewritten_holds_with_gaussian_noise(self):
        assert check_mii_rewritten(fam([laplace(), mixture()]), gauss()).verdict != "violated"

    @pytest.mark.parametrize("members", [(laplace, gauss), (mixture, laplace), (laplace, laplace)])
    def test_gap_function_nonincreasing(self, members):
        f = fam([m() for m in members], (0.6, 0.8))
        vals = [mii_gap(f, t) for t in (0.1, 0.3, 1.0, 3.0, 10.0, 100.0)]
        for (a, ea), (b, eb) in zip(vals, vals[1:]):
            assert b <= a + 10 * (ea + eb) + 1e-5

    @pytest.mark.parametrize("members", [(laplace, gauss), (mixture, laplace)])
    def test_mii_implies_epi_chain(self, members):
        f = fam([m() for m in members], (0.6, 0.8))
        slacks = [check_mii(f, GaussianND([0.0], [[t]])).slack for t in (1.0, 10.0, 100.0)]
        if all(s >= 0 for s in slacks):
            assert check_epi(f, "concavity").verdict != "violated"
        deficits = [epi_deficit(f.with_noise([[t]])) for t in (0.0001, 0.1, 1.0, 10.0)]
        deficits[0] = epi_deficit(f)
        for (a, ea), (b, eb) in zip(deficits, deficits[1:]):
            assert b <= a + 10 * (ea + eb) + 1e-5


class TestOthers:
    def test_cramer_rao(self):
        assert check_cramer_rao(gauss(3.0)).verdict == "equality"
        assert check_cramer_rao(laplace()).verdict == "holds"

    def test_sato_gaussian(self):
        r = check_sato([gauss(), gauss()], gauss())
        assert near(r.lhs, 0.5 * math.log(3), 1e-12) and near(r.rhs, math.log(2), 1e-12)
        assert near(r.slack, oracles.SATO_GAUSSIAN_SLACK, 1e-12)

    def test_sato_vanishing_noise(self):
        r = check_sato([gauss(), gauss()], gauss(1e-6))
        assert abs(r.lhs) < 1e-5 and abs(r.rhs) < 1e-5

    def test_sato_mixed(self):
        r = check_sato([gauss(), laplace()], gauss())
        assert r.slack > 0 and r.verdict == "holds"

    def test_sato_three_monte_carlo(self):
        r = check_sato([laplace(), laplace(), mixture()], gauss(), seed=5, samples=20_000)
        assert r.method == "monte-carlo" and r.verdict != "violated"

    def test_sato_peeling_matches_monte_carlo(self, monkeypatch):
        dists = [gauss(), laplace(), gauss(2.0)]
        peeled = check_sato(dists, gauss(), seed=5, samples=50_000)
        assert peeled.method != "monte-carlo"
        monkeypatch.setattr(inequalities, "_peel_gaussians", lambda ds, z: ([], list(ds), z))
        mc = check_sato(dists, gauss(), seed=5, samples=50_000)
        assert mc.method == "monte-carlo"
        assert abs(peeled.lhs - mc.lhs) <= 5 * mc.error_estimate + 1e-3

    def test_dpi_gaussian(self):
        mmse_r, fisher_r = check_dpi(GaussianChain(gauss(), [[1.0]], [[1.0]], [[1.0]]))
        assert near(mmse_r.rhs, 0.5, 1e-14) and near(mmse_r.lhs, 2 / 3, 1e-14)
        assert near(mmse_r.slack, oracles.DPI_GAUSSIAN_MMSE_SLACK, 1e-14)
        assert fisher_r.slack > 0

    def test_dpi_lossless(self):
        reports = check_dpi(GaussianChain(mixture(), [[1.0]], [[1.0]], [[0.0]]))
        assert all(r.verdict == "equality" for r in reports)

    def test_dpi_mixture_prior(self):
        reports = check_dpi(GaussianChain(mixture(), [[0.5]], [[2.0]], [[1.0]]))
        assert all(r.verdict == "holds" for r in reports)

    def test_saddlepoint(self):
        assert check_saddlepoint(gauss(2.0), gauss()).verdict == "equality"
        assert check_saddlepoint(laplace(), gauss()).slack > 0
        assert check_saddlepoint(mixture(), gauss(0.5)).slack > 0

    def test_contrast(self):
        assert check_contrast(fam([gauss(), gauss()])).verdict == "equality"
        assert check_contrast(fam([laplace(), mixture()])).verdict == "holds"
        assert check_contrast(fam([laplace(), mixture()], (0.0, 1.0))).verdict == "equality"


def _violated(r):
    return r.verdict == "violated"


@given(x1=scalar_laws(), x2=scalar_laws(), a=coefficient_pairs)
@settings(max_examples=12)
def test_epi_forms_agree(x1, x2, a):
    f = fam([x1, x2], a)
    reports = [check_epi(f, form) for form in EPI_FORMS]
    assert len({_violated(r) for r in reports}) == 1
    assert not any(_violated(r) for r in reports)
    for r in reports:
        if r.equality_expected:
            assert r.verdict == "equality"


@given(x1=scalar_laws(), x2=scalar_laws(), a=coefficient_pairs)
@settings(max_examples=12)
def test_fii_forms_agree(x1, x2, a):
    f = fam([x1, x2], a)
    reports = [check_fii(f, form) for form in FII_FORMS]
    assert len({_violated(r) for r in reports}) == 1
    assert not any(_violated(r) for r in reports)


@given(x1=scalar_laws(), x2=scalar_laws(), a=coefficient_pairs)
@settings(max_examples=10)
def test_sign_flip_invariance(x1, x2, a):
    f, g = fam([x1, x2], a), fam([x1, x2], (-a[0], -a[1]))
    for check in (lambda w: check_epi(w, "concavity"), lambda w: check_fii(w, "convexity"),
                  lambda w: check_mii(w, gauss()), check_contrast):
        assert abs(check(f).slack - check(g).slack) <= 1e-12


@given(v1=st.floats(0.2, 4.0), v2=st.floats(0.2, 4.0), a=coefficient_pairs)
def test_gaussian_identical_covariance_equality(v1, v2, a):
    f = fam([gauss(v1), gauss(v1)], a)
    for r in (check_epi(f, "concavity"), check_mii(f, gauss()), check_contrast(f), check_fii(f, "convexity")):
        assert r.verdict == "equality" and r.equality_expected
    if abs(v1 - v2) > 0.2 and min(abs(a[0]), abs(a[1])) > 0.2:
        g = fam([gauss(v1), gauss(v2)], a)
        assert check_epi(g, "concavity").verdict == "holds"
        assert check_mii(g, gauss()).verdict == "holds"
