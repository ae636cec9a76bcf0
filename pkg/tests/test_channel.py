import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import gauss, laplace, mixture, near, scalar_laws, smoothed_uniform
from epilab.channel import (NOISE_SCALED, SIGNAL_SCALED, ChannelSpec, complementary_matrix_residual,
                            complementary_residual, conditional_mean, mmse, mmse_matrix, mutual_info_noise,
                            mutual_info_signal)
from epilab.distributions import GaussianND, GaussianSmoothed, Laplace1D, ProductND, Uniform1D, sample
from epilab.errors import DomainError
from epilab.functionals import entropy, fisher_info
import oracles


def noisy(x, t=1.0, var=1.0):
    return ChannelSpec(x, gauss(var), NOISE_SCALED, t)


class TestConditionalMean:
    def test_gaussian_linear(self):
        assert near(conditional_mean(noisy(gauss()), [1.0])[0], 0.5, 1e-15)

    def test_symmetric_mixture_at_zero(self):
        assert near(conditional_mean(noisy(mixture()), [0.0])[0], 0.0, 1e-14)

    def test_uniform_midpoint(self):
        y = conditional_mean(noisy(Uniform1D(0.0, 1.0)), [0.5])[0]
        assert near(y, oracles.UNIFORM_CONDITIONAL_MEAN_AT_HALF, 1e-10)

    def test_vectorized(self):
        ys = np.linspace(-2, 2, 5)[:, None]
        out = conditional_mean(noisy(gauss(2.0)), ys)
        assert np.allclose(out[:, 0], 2.0 / 3.0 * ys[:, 0], atol=1e-14)


class TestMmse:
    def test_gaussian(self):
        assert near(mmse(noisy(gauss())).value, 0.5, 1e-15)

    def test_mixture_frozen(self):
        r = mmse(noisy(mixture()))
        assert near(r.value, oracles.MIXTURE_MMSE_T1, 1e-8)

    @pytest.mark.parametrize("make", [gauss, laplace, mixture, lambda: Uniform1D(0, 1)])
    def test_data_processing_monotone(self, make):
        x = make()
        values = [mmse(noisy(x, var=v)) for v in (0.25, 0.5, 1.0, 2.0, 4.0)]
        for a, b in zip(values, values[1:]):
            assert b.value >= a.value - 10 * (a.error_estimate + b.error_estimate) - 1e-12

    def test_matrix_product_diagonal(self):
        x = ProductND([laplace(), mixture()])
        m = mmse_matrix(ChannelSpec(x, GaussianND([0, 0], np.eye(2)), NOISE_SCALED, 1.0))
        assert m.value[0, 1] == 0.0
        assert near(m.value[1, 1], oracles.MIXTURE_MMSE_T1, 1e-7)

    def test_total_covariance_gaussian_pair(self):
        # Var(X) = Var(X|Y) + Var(E(X|Y))
        x, ch = gauss(2.0), noisy(gauss(2.0), var=0.5)
        xs = sample(x, 200_000, 11)[:, 0]
        ys = xs + math.sqrt(0.5) * np.random.default_rng(12).standard_normal(xs.size)
        est = conditional_mean(ch, ys[:, None])[:, 0]
        lhs = xs.var(ddof=1)
        rhs = mmse(ch).value + est.var(ddof=1)
        se = math.sqrt(2.0 / xs.size) * 2.0 * 2
        assert abs(lhs - rhs) <= 3 * se


class TestMutualInformation:
    def test_zero_t(self):
        assert mutual_info_noise(noisy(laplace(), t=0.0)).value == 0.0
        assert mutual_info_signal(ChannelSpec(laplace(), gauss(), SIGNAL_SCALED, 0.0)).value == 0.0

    def test_laplace_first_order(self):
        v = mutual_info_noise(noisy(laplace(), t=0.01)).value
        assert abs(v - 0.01) <= 0.2 * 0.01

    def test_shannon_capacity(self):
        v = mutual_info_signal(ChannelSpec(gauss(), gauss(), SIGNAL_SCALED, 1.0)).value
        assert near(v, 0.5 * math.log(2), 1e-14)

    @pytest.mark.parametrize("t", [0.25, 1.0, 4.0])
    @pytest.mark.parametrize("make", [gauss, laplace, mixture])
    def test_orientation_duality(self, t, make):
        # I(X; sqrt(t) X + Z) = I(X + Z / sqrt(t); Z) + h(X) - h(Z) + (n/2) log t
        x, z = make(), gauss()
        sig = mutual_info_signal(ChannelSpec(x, z, SIGNAL_SCALED, t))
        noi = mutual_info_noise(noisy(x, t=1 / t))
        hx, hz = entropy(x), entropy(z)
        expect = noi.value + hx.nats - hz.nats + 0.5 * math.log(t)
        budget = sig.error_estimate + noi.error_estimate + hx.error_estimate + hz.error_estimate
        assert abs(sig.value - expect) <= max(10 * budget, 1e-10)

    @given(law=scalar_laws())
    def test_monotone_in_t(self, law):
        vals = [mutual_info_noise(noisy(law, t=t)) for t in (0.0, 0.1, 0.5, 1.0, 3.0, 10.0)]
        for a, b in zip(vals, vals[1:]):
            assert b.value >= a.value - 10 * (a.error_estimate + b.error_estimate) - 1e-12


class TestComplementary:
    @pytest.mark.parametrize("var", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("make", [gauss, laplace, mixture, smoothed_uniform])
    def test_identity(self, var, make):
        assert abs(complementary_residual(make(), var).value) <= 1e-3

    def test_gaussian_exact(self):
        assert abs(complementary_residual(gauss(3.0), 0.7).value) < 1e-14

    def test_matrix_form(self):
        x = ProductND([laplace(), mixture()])
        r = complementary_matrix_residual(x, np.diag([0.5, 2.0]))
        assert np.max(np.abs(r.value)) <= 1e-3

    def test_positive_variance_required(self):
        with pytest.raises(DomainError):
            complementary_residual(gauss(), 0.0)


class TestChannelSpec:
    def test_non_gaussian_noise_rejected(self):
        with pytest.raises(DomainError):
            ChannelSpec(gauss(), laplace())

    def test_bad_orientation(self):
        with pytest.raises(ValueError):
            ChannelSpec(gauss(), gauss(), "sideways")


@pytest.mark.parametrize("v", [1e-3, 0.5, 4.0])
@pytest.mark.parametrize("base", [Uniform1D(-1.0, 1.0), Laplace1D(0.3, 0.5)])
def test_smoothed_mmse_reduction_matches_direct_quadrature(base, v):
    from epilab.channel import _mmse_1d, _mmse_scalar
    x = GaussianSmoothed(base, 0.3, [[1.0]])
    reduced, direct = _mmse_scalar(x, v), _mmse_1d(x, v)
    assert abs(reduced.value - direct.value) <= 1e-10 * max(v, 1e-3)
