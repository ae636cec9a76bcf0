import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gauss, laplace, mixture, near, np_close, smoothed_uniform
from epilab.distributions import GaussianND, MixtureND
from epilab.errors import DomainError, RankDeficient
from epilab.extensions.costa import COSTA_GRID, costa_concavity
from epilab.extensions.dependent import (DependentPairSpec, check_dependent_epi, dependent_condition,
                                         gaussian_gap_top_left, random_joint)
from epilab.extensions.liu_viswanath import (LVProblemSpec, check_lv_epi, grid_search_scalar, lv_objective,
                                             lv_solve, random_feasible_cov)
from epilab.extensions.subsets import balance, check_gas_mixture, check_subset_epi, leave_one_out
from epilab.extensions.zamir_feder import (LinearMixSpec, check_zf_epi, check_zf_fii, check_zf_mii,
                                           random_orthonormal_rows)
from epilab.functionals import entropy
from epilab.inequalities import WeightedFamily, check_epi
import oracles

ROW = [[2**-0.5, 2**-0.5]]


class TestZamirFeder:
    def test_gaussian_equality(self):
        assert check_zf_epi(LinearMixSpec(ROW, [gauss(), gauss()])).verdict == "equality"

    def test_laplace_positive(self):
        assert check_zf_epi(LinearMixSpec(ROW, [laplace(), laplace()])).slack > 0

    def test_two_rows_mixed(self):
        a = [[1, 0, 0], [0, 2**-0.5, 2**-0.5]]
        spec = LinearMixSpec(a, [laplace(), mixture(), laplace()])
        for form in ("concavity", "power", "gaussian"):
            assert check_zf_epi(spec, form).verdict != "violated"
        assert check_zf_fii(spec).verdict != "violated"

    def test_dense_two_rows_fisher(self):
        # every row mixes every column, so the image density is a null-direction integral
        a = random_orthonormal_rows(np.random.default_rng(3), 2, 3)
        assert np.all(np.abs(a) > 0.1)
        rep = check_zf_fii(LinearMixSpec(a, [laplace(), smoothed_uniform(), gauss()]))
        assert rep.verdict == "holds" and rep.slack > 0.1

    @pytest.mark.parametrize("seed", range(4))
    def test_single_row_matches_plain_epi(self, seed):
        rng = np.random.default_rng(seed)
        a = random_orthonormal_rows(rng, 1, 2)
        margs = [laplace(), mixture()]
        zf = check_zf_epi(LinearMixSpec(a, margs))
        plain = check_epi(WeightedFamily(tuple(margs), a[0]), "concavity")
        assert abs(zf.slack - plain.slack) <= 1e-10

    def test_mii_single_row(self):
        assert check_zf_mii(LinearMixSpec(ROW, [laplace(), gauss()])).verdict == "holds"

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            LinearMixSpec([[1, 1], [2, 2]], [gauss(), gauss()])

    def test_orthonormal_required(self):
        with pytest.raises(DomainError):
            check_zf_fii(LinearMixSpec([[1.0, 1.0]], [gauss(), gauss()]))

    def test_random_rows_orthonormal(self):
        a = random_orthonormal_rows(np.random.default_rng(0), 2, 3)
        assert np_close(a @ a.T, np.eye(2), 1e-12)


class TestDependent:
    def test_correlated_gaussian_gap(self):
        joint = GaussianND([0, 0], [[1.0, 0.5], [0.5, 1.0]])
        res = dependent_condition(DependentPairSpec(joint, 1.0))
        assert near(res.matrix_gap[0, 0], gaussian_gap_top_left(0.5, 1.0), 1e-8)
        assert res.matrix_gap[0, 0] < 0 and not res.holds

    def test_independent_holds(self):
        joint = GaussianND([0, 0], np.diag([1.0, 2.0]))
        assert dependent_condition(DependentPairSpec(joint, 1.0)).holds

    @pytest.mark.parametrize("seed", range(8))
    def test_ordering_chain(self, seed):
        spec = DependentPairSpec(random_joint(np.random.default_rng(seed)), 1.0)
        res = dependent_condition(spec)
        if res.holds:
            assert res.takano_holds
        if res.takano_holds:
            assert res.johnson_holds

    @pytest.mark.parametrize("seed", range(4))
    def test_soundness(self, seed):
        spec = DependentPairSpec(random_joint(np.random.default_rng(100 + seed)), 1.0)
        r = check_dependent_epi(spec)
        if r.details["condition_holds"]:
            assert r.verdict != "violated"

    def test_non_bivariate_rejected(self):
        with pytest.raises(Exception):
            DependentPairSpec(gauss(), 1.0)


class TestLiuViswanath:
    def test_unconstrained(self):
        sol = lv_solve(LVProblemSpec([[10.0]], [[1.0]], 2.0))
        assert near(sol.cov[0, 0], 1.0, 1e-8) and np.all(np.abs(sol.multiplier) <= 1e-8)

    def test_cap_binds(self):
        sol = lv_solve(LVProblemSpec([[0.5]], [[1.0]], 2.0))
        assert near(sol.cov[0, 0], grid_search_scalar(0.5, 1.0, 2.0), 1e-4)
        assert sol.multiplier[0, 0] > 0 and sol.kkt_residual <= 1e-8

    def test_diagonal(self):
        sol = lv_solve(LVProblemSpec(np.diag([10.0, 0.5]), np.eye(2), 2.0))
        assert np_close(sol.cov, np.diag([1.0, 0.5]), 1e-4)

    @pytest.mark.parametrize("mu", [1.5, 2.0, 4.0])
    def test_unconstrained_general_noise(self, mu):
        k = np.array([[2.0, 0.3], [0.3, 1.0]])
        sol = lv_solve(LVProblemSpec(100 * np.eye(2), k, mu))
        assert np_close(sol.cov, k / (mu - 1), 1e-8)

    def test_mu_must_exceed_one(self):
        with pytest.raises(DomainError):
            LVProblemSpec([[1.0]], [[1.0]], 1.0)

    @pytest.mark.parametrize("seed", range(3))
    def test_beats_random_feasible(self, seed):
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((2, 2))
        cap = g @ g.T + 0.5 * np.eye(2)
        k = np.diag(rng.uniform(0.5, 2.0, 2))
        mu = float(rng.uniform(1.2, 4.0))
        sol = lv_solve(LVProblemSpec(cap, k, mu))
        assert sol.kkt_residual <= 1e-8
        for _ in range(200):
            v = random_feasible_cov(rng, cap)
            assert lv_objective(v, k, mu) <= sol.objective + 1e-12

    @pytest.mark.parametrize("make", [laplace, mixture, smoothed_uniform])
    def test_gaussian_optimal_among_same_covariance(self, make):
        mu = 2.0
        sol = lv_solve(LVProblemSpec([[0.5]], [[1.0]], mu))
        x = make()
        x = x.scaled(math.sqrt(sol.cov[0, 0] / x.mean_cov()[1][0, 0]))
        xg = GaussianND([0.0], sol.cov)
        z = gauss()
        from epilab.distributions import linear_combination
        value = entropy(x).nats - mu * entropy(linear_combination([1, 1], [x, z])).nats
        gvalue = entropy(xg).nats - mu * entropy(linear_combination([1, 1], [xg, z])).nats
        assert value <= gvalue + 1e-5

    def test_lv_epi(self):
        assert check_lv_epi(laplace(0.5), gauss()).verdict != "violated"


class TestCosta:
    def test_gaussian_linear(self):
        res = costa_concavity(gauss(2.0))
        assert max(abs(d) for d in res.second_differences) <= 1e-10
        assert res.N_values[0] == pytest.approx(2.0 + COSTA_GRID[0])

    @pytest.mark.parametrize("make", [laplace, mixture])
    def test_concave(self, make):
        res = costa_concavity(make())
        assert max(res.second_differences) <= 1e-4
        assert res.slopes_nonincreasing and res.report.verdict != "violated"
        assert res.shannon_slack >= -1e-5

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            costa_concavity(gauss(), None, [0.0, 1.0, 2.0])


class TestSubsets:
    def test_balance(self):
        coll, k = balance([(0, 1), (1, 2)], 3)
        assert k == 2 and sorted(coll) == [(0,), (0, 1), (1, 2), (2,)]

    def test_leave_one_out(self):
        assert leave_one_out(3) == [(1, 2), (0, 2), (0, 1)]

    @pytest.mark.parametrize("form", ["concavity", "power", "fii", "mii"])
    def test_gaussian_equality(self, form):
        r = check_subset_epi([gauss(), gauss(), gauss()], [1, 1, 1], leave_one_out(3), form)
        assert r.verdict == "equality"

    @pytest.mark.parametrize("form", ["concavity", "power", "fii", "mii"])
    def test_laplace_holds(self, form):
        r = check_subset_epi([laplace(), laplace(), laplace()], [1, 1, 1], leave_one_out(3), form)
        assert r.verdict == "holds"

    def test_gas_identical_components(self):
        assert all(r.verdict == "equality" for r in check_gas_mixture([0.5, 0.5], [laplace(), laplace()]))

    def test_gas_two_gaussians(self):
        reports = check_gas_mixture([0.5, 0.5], [gauss(1.0, -2.0), gauss(1.0, 2.0)])
        h = next(r for r in reports if r.name == "gas-entropy")
        assert near(h.lhs, oracles.MIXTURE_ENTROPY, 1e-9)
        assert near(h.rhs, oracles.GAUSS_ENTROPY_1D, 1e-12) and h.verdict == "holds"

    def test_gas_gaussian_laplace(self):
        assert all(r.verdict == "holds" for r in check_gas_mixture([0.5, 0.5], [gauss(), laplace()]))
