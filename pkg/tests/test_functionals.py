import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gauss, laplace, mixture, near, np_close, scalar_laws, smoothed_uniform
from epilab.distributions import Cauchy1D, GaussianND, LinearImage, ProductND, Uniform1D, linear_combination
from epilab.errors import NonSmoothDensity
from epilab.functionals import (divergence, entropy, entropy_power, fisher_info, kullback_expansion_check,
                                non_gaussianness_h, non_gaussianness_j, translation_family)
from epilab.inequalities import check_cramer_rao
import oracles


class TestEntropy:
    def test_standard_normal(self):
        h = entropy(gauss())
        assert near(h.nats, oracles.GAUSS_ENTROPY_1D, 1e-15) and h.method == "closed-form"

    def test_uniform(self):
        assert near(entropy(Uniform1D(0, 1)).nats, 0.0, 1e-15)

    def test_mixture_matches_frozen_oracle(self):
        h = entropy(mixture())
        assert near(h.nats, oracles.MIXTURE_ENTROPY, 1e-9)
        assert h.error_estimate < 1e-8

    def test_laplace(self):
        assert near(entropy(laplace()).nats, oracles.LAPLACE_ENTROPY, 1e-14)

    def test_laplace_sums(self):
        pair = linear_combination([1, 1], [laplace(), gauss()])
        assert near(entropy(pair.scaled(2**-0.5)).nats, oracles.LAPLACE_GAUSS_SUM_ENTROPY, 1e-9)
        triple = linear_combination([3**-0.5] * 3, [laplace()] * 3)
        assert near(entropy(triple).nats, oracles.LAPLACE_TRIPLE_ENTROPY, 1e-9)

    def test_cauchy_admitted(self):
        # h = log(4 pi gamma)
        assert near(entropy(Cauchy1D(0.0, 1.0)).nats, math.log(4 * math.pi), 1e-7)

    def test_monte_carlo_agrees_with_quadrature(self):
        for d in (gauss(), laplace(), mixture()):
            q = entropy(d, method="quadrature")
            mc = entropy(d, method="monte-carlo")
            assert mc.method == "monte-carlo"
            assert abs(q.nats - mc.nats) <= 3 * (q.error_estimate + mc.error_estimate)

    def test_two_dimensional_product(self):
        d = ProductND([laplace(), mixture()])
        h = entropy(d)
        assert near(h.nats, oracles.LAPLACE_ENTROPY + oracles.MIXTURE_ENTROPY, 1e-7)


class TestEntropyPower:
    def test_gaussian(self):
        assert near(entropy_power(gauss(4.0)).value, 4.0, 1e-14)

    def test_uniform(self):
        assert near(entropy_power(Uniform1D(0, 1)).value, 1 / (2 * math.pi * math.e), 1e-15)

    def test_diagonal(self):
        assert near(entropy_power(GaussianND([0, 0], np.diag([1.0, 4.0]))).value, 2.0, 1e-14)

    @given(law=scalar_laws())
    def test_shannon_sandwich(self, law):
        h = entropy(law)
        n = entropy_power(law, h)
        _, cov = law.mean_cov()
        tol = max(1e-5, 10 * n.error_estimate)
        assert n.value <= cov[0, 0] + tol


class TestScaling:
    @pytest.mark.parametrize("a", [0.5, 2.0, -1.0])
    @pytest.mark.parametrize("make", [laplace, mixture, smoothed_uniform])
    def test_entropy_and_power(self, a, make):
        d = make()
        h, ha = entropy(d), entropy(LinearImage([[a]], d))
        assert near(ha.nats, h.nats + math.log(abs(a)), 1e-6)
        assert near(entropy_power(LinearImage([[a]], d)).value, a * a * entropy_power(d).value, 1e-6)

    @pytest.mark.parametrize("a", [0.5, 2.0, -1.0])
    @pytest.mark.parametrize("make", [laplace, mixture, smoothed_uniform])
    def test_fisher(self, a, make):
        d = make()
        j, ja = fisher_info(d), fisher_info(LinearImage([[a]], d))
        assert abs(ja.scalar - j.scalar / a**2) <= max(1e-9, ja.error_estimate + j.error_estimate / a**2)


class TestFisher:
    def test_white_gaussian(self):
        j = fisher_info(GaussianND(np.zeros(3), np.eye(3)))
        assert j.scalar == 3.0 and np_close(j.matrix, np.eye(3), 0)

    def test_unit_laplace(self):
        assert near(fisher_info(laplace()).scalar, oracles.LAPLACE_FISHER, 1e-12)

    def test_product_is_diagonal(self):
        parts = [laplace(), mixture()]
        j = fisher_info(ProductND(parts))
        expect = np.diag([fisher_info(p).scalar for p in parts])
        assert np_close(j.matrix, expect, 1e-8)

    def test_laplace_pair(self):
        d = linear_combination([2**-0.5, 2**-0.5], [laplace(), laplace()])
        assert near(fisher_info(d).scalar, oracles.LAPLACE_PAIR_FISHER, 1e-8)

    def test_uniform_rejected(self):
        with pytest.raises(NonSmoothDensity):
            fisher_info(Uniform1D(0, 1))

    @given(law=scalar_laws())
    def test_cramer_rao(self, law):
        r = check_cramer_rao(law)
        assert r.verdict != "violated"
        assert (r.verdict == "equality") == isinstance(law.impl, GaussianND)

    @given(law=scalar_laws())
    def test_trace_consistency(self, law):
        j = fisher_info(law)
        assert abs(j.scalar - np.trace(j.matrix)) <= 1e-8

    def test_matrix_trace_two_dimensional(self):
        j = fisher_info(ProductND([laplace(), smoothed_uniform()]))
        assert abs(j.scalar - np.trace(j.matrix)) <= 1e-8


class TestDivergence:
    def test_identical(self):
        assert divergence(gauss(), gauss()).value == 0.0

    def test_shifted_gaussian(self):
        assert near(divergence(gauss(), gauss(1.0, 1.0)).value, 0.5, 1e-12)

    def test_laplace_to_normal_equals_non_gaussianness(self):
        d = divergence(laplace(), gauss())
        assert near(d.value, oracles.LAPLACE_KL_TO_STD_NORMAL, 1e-8)
        assert near(d.value, non_gaussianness_h(laplace()).value, 1e-6)


class TestNonGaussianness:
    @pytest.mark.parametrize("cov", [[[1.0]], [[0.2]], [[2.0, 0.3], [0.3, 1.0]]])
    def test_gaussian_zero(self, cov):
        g = GaussianND(np.zeros(len(cov)), cov)
        assert abs(non_gaussianness_h(g).value) < 1e-12
        assert abs(non_gaussianness_j(g).value) < 1e-12

    def test_mixture(self):
        assert near(non_gaussianness_h(mixture()).value, oracles.MIXTURE_NONGAUSSIANNESS_H, 1e-8)

    @given(law=scalar_laws())
    def test_nonnegative(self, law):
        h, j = non_gaussianness_h(law), non_gaussianness_j(law)
        assert h.value >= -max(1e-6, 10 * h.error_estimate)
        assert j.value >= -max(1e-6, 10 * j.error_estimate)


class TestKullbackExpansion:
    def test_gaussian_exact(self):
        r = kullback_expansion_check(translation_family(gauss()), [0.0])
        assert np.all(np.asarray(r.value) < 1e-9)

    def test_laplace(self):
        r = kullback_expansion_check(translation_family(laplace()), [0.0])
        assert r.value[-1] < 1e-2

    def test_mixture_decreasing(self):
        r = np.asarray(kullback_expansion_check(translation_family(mixture()), [0.0]).value)
        assert r[0] > r[1] > r[2]
