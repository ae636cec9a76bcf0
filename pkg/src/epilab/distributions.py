"""Probability laws with exact densities, scores, moments, sampling and
Gaussian convolution.

Public variants are frozen dataclasses.  Composite variants (Gaussian
smoothing, linear images, independent sums) resolve lazily to an internal
computational object that carries the actual density evaluation; all
variants expose the same vectorized interface on arrays of shape ``(k, n)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import special

from .errors import (
    DimensionMismatch,
    DomainError,
    HeavyTail,
    NonSmoothDensity,
    NumericalFailure,
    RankDeficient,
    UnsupportedConvolution,
    UnsupportedDimension,
)
from .numerics import NumericResult, integrate, integrate_box, make_rng, segmented_quadrature

TRUNCATION_SIGMAS = 12.0
LAPLACE_TAIL_SCALES = 40.0
# below this Laplace-scale to smoothing-sigma ratio the smoothed Laplace is
# replaced by its moment-matched Gaussian (relative density error ~ ratio**4)
NEGLIGIBLE_LAPLACE_RATIO = 1e-4
FIBER_PANELS = 4
CAUCHY_TAIL_SCALES = 1e14
_LOG_2PI = math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)


def _points(x, n):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim == 1 and n == 1:
        x = x[:, None]
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != n:
        raise DimensionMismatch(f"expected points of dimension {n}, got shape {x.shape}")
    return x


def _sym_matrix(m, name, pd=True):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {m.shape}")
    if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, float(np.max(np.abs(m)))):
        raise DomainError(f"{name} is not symmetric")
    m = 0.5 * (m + m.T)
    eig = np.linalg.eigvalsh(m)
    if pd and eig.min() <= 0:
        raise DomainError(f"{name} must be positive definite (min eigenvalue {eig.min():.3g})")
    if not pd and eig.min() < -1e-12 * max(1.0, float(eig.max())):
        raise DomainError(f"{name} must be positive semidefinite")
    return m


def _psd_sqrt(m):
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


class Distribution:
    """Common interface.  Subclasses override what their family provides."""

    dim: int = 1

    @property
    def impl(self) -> "Distribution":
        return self

    # density ----------------------------------------------------------
    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def density(self, x):
        """Density values and an absolute error estimate."""
        return self.pdf(x), 0.0

    def score(self, x):
        if self.has_jumps:
            raise NonSmoothDensity(f"{type(self).__name__} has a discontinuous density")
        x = _points(x, self.dim)
        out = np.empty_like(x)
        for j in range(self.dim):
            h = 1e-5 * max(1.0, float(np.max(np.abs(x[:, j]))))
            e = np.zeros(self.dim)
            e[j] = h
            out[:, j] = (self.logpdf(x + e) - self.logpdf(x - e)) / (2 * h)
        return out

    def grad_pdf(self, x):
        x = _points(x, self.dim)
        return self.pdf(x)[:, None] * self.score(x)

    def pdf_and_grad(self, x):
        x = _points(x, self.dim)
        if type(self).grad_pdf is Distribution.grad_pdf:
            p = self.pdf(x)
            return p, p[:, None] * self.score(x)
        return self.pdf(x), self.grad_pdf(x)

    # structure --------------------------------------------------------
    has_jumps = False
    is_gaussian = False
    score_is_exact = True

    def box(self):
        mean, cov = self.mean_cov()
        sd = np.sqrt(np.diag(cov))
        return mean - TRUNCATION_SIGMAS * sd, mean + TRUNCATION_SIGMAS * sd

    def breaks(self):
        """Per-axis abscissae worth starting quadrature panels at."""
        return [tuple(self.kinks())] if self.dim == 1 else [()] * self.dim

    def kinks(self):
        """Points (1-D only) where the density is not smooth."""
        return ()

    def entropy_closed(self):
        return None

    def fisher_closed(self):
        return None

    def smoothed(self, noise_cov):
        """Closed-form law of self + N(0, noise_cov), or None."""
        return None

    def mean_cov(self):
        raise NotImplementedError

    def draw(self, rng, count):
        raise NotImplementedError


# ----------------------------------------------------------------------
# analytic families


@dataclass(frozen=True, eq=False)
class GaussianND(Distribution):
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = _sym_matrix(self.cov, "cov")
        if cov.shape[0] != mean.size:
            raise DimensionMismatch("mean and cov sizes differ")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.size

    is_gaussian = True

    @cached_property
    def _chol(self):
        return np.linalg.cholesky(self.cov)

    @cached_property
    def _prec(self):
        return np.linalg.inv(self.cov)

    @cached_property
    def _logdet(self):
        return 2.0 * float(np.sum(np.log(np.diag(self._chol))))

    def logpdf(self, x):
        x = _points(x, self.dim)
        d = x - self.mean
        if self.dim == 1:
            var = float(self.cov[0, 0])
            return -0.5 * d[:, 0] ** 2 / var - 0.5 * (_LOG_2PI + math.log(var))
        sol = np.linalg.solve(self._chol, d.T)
        return -0.5 * np.sum(sol * sol, axis=0) - 0.5 * (self.dim * _LOG_2PI + self._logdet)

    def score(self, x):
        x = _points(x, self.dim)
        return -(x - self.mean) @ self._prec

    def mean_cov(self):
        return self.mean.copy(), self.cov.copy()

    def draw(self, rng, count):
        z = rng.standard_normal((count, self.dim))
        return self.mean + z @ self._chol.T

    def breaks(self):
        return [(float(m),) for m in self.mean]

    def entropy_closed(self):
        return 0.5 * (self.dim * math.log(2 * math.pi * math.e) + self._logdet)

    def fisher_closed(self):
        return self._prec.copy()

    def smoothed(self, noise_cov):
        return GaussianND(self.mean, self.cov + noise_cov)

    def scaled(self, c):
        return GaussianND(c * self.mean, c * c * self.cov)

    def shifted(self, b):
        return GaussianND(self.mean + b, self.cov)


@dataclass(frozen=True, eq=False)
class Laplace1D(Distribution):
    loc: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("Laplace scale must be positive")
        object.__setattr__(self, "loc", float(self.loc))
        object.__setattr__(self, "scale", float(self.scale))

    def logpdf(self, x):
        x = _points(x, 1)[:, 0]
        return -np.abs(x - self.loc) / self.scale - math.log(2 * self.scale)

    def score(self, x):
        x = _points(x, 1)
        return -np.sign(x - self.loc) / self.scale

    def mean_cov(self):
        return np.array([self.loc]), np.array([[2 * self.scale**2]])

    def draw(self, rng, count):
        return rng.laplace(self.loc, self.scale, (count, 1))

    def box(self):
        w = LAPLACE_TAIL_SCALES * self.scale
        return np.array([self.loc - w]), np.array([self.loc + w])

    def kinks(self):
        return (self.loc,)

    def entropy_closed(self):
        return 1.0 + math.log(2 * self.scale)

    def fisher_closed(self):
        return np.array([[1.0 / self.scale**2]])

    def smoothed(self, noise_cov):
        v = float(np.asarray(noise_cov).reshape(-1)[0])
        return self if v == 0 else _SmoothedLaplace(self.loc, self.scale, v)

    def scaled(self, c):
        return Laplace1D(c * self.loc, abs(c) * self.scale)

    def shifted(self, b):
        return Laplace1D(self.loc + float(np.ravel(b)[0]), self.scale)


@dataclass(frozen=True, eq=False)
class Uniform1D(Distribution):
    lower: float
    upper: float

    def __post_init__(self):
        if not self.upper > self.lower:
            raise DomainError("Uniform requires upper > lower")
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))

    has_jumps = True

    def pdf(self, x):
        x = _points(x, 1)[:, 0]
        inside = (x >= self.lower) & (x <= self.upper)
        return np.where(inside, 1.0 / (self.upper - self.lower), 0.0)

    def score(self, x):
        raise NonSmoothDensity("uniform density has jumps; smooth it with a Gaussian first")

    def mean_cov(self):
        w = self.upper - self.lower
        return np.array([0.5 * (self.lower + self.upper)]), np.array([[w * w / 12.0]])

    def draw(self, rng, count):
        return rng.uniform(self.lower, self.upper, (count, 1))

    def box(self):
        return np.array([self.lower]), np.array([self.upper])

    def kinks(self):
        return (self.lower, self.upper)

    def entropy_closed(self):
        return math.log(self.upper - self.lower)

    def smoothed(self, noise_cov):
        v = float(np.asarray(noise_cov).reshape(-1)[0])
        return self if v == 0 else _SmoothedUniform(self.lower, self.upper, v)

    def scaled(self, c):
        a, b = sorted((c * self.lower, c * self.upper))
        return Uniform1D(a, b)

    def shifted(self, b):
        b = float(np.ravel(b)[0])
        return Uniform1D(self.lower + b, self.upper + b)


def _cauchy_breaks(loc, s):
    offs = s * 10.0 ** np.arange(0, int(math.log10(CAUCHY_TAIL_SCALES)))
    return tuple(np.concatenate([loc - offs[::-1], [loc], loc + offs]))


@dataclass(frozen=True, eq=False)
class Cauchy1D(Distribution):
    loc: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("Cauchy scale must be positive")
        object.__setattr__(self, "loc", float(self.loc))
        object.__setattr__(self, "scale", float(self.scale))

    def logpdf(self, x):
        u = (_points(x, 1)[:, 0] - self.loc) / self.scale
        return -np.log1p(u * u) - math.log(math.pi * self.scale)

    def score(self, x):
        d = _points(x, 1) - self.loc
        return -2 * d / (self.scale**2 + d * d)

    def mean_cov(self):
        raise HeavyTail("the Cauchy law has no finite covariance")

    def draw(self, rng, count):
        return self.loc + self.scale * rng.standard_cauchy((count, 1))

    def box(self):
        w = CAUCHY_TAIL_SCALES * self.scale
        return np.array([self.loc - w]), np.array([self.loc + w])

    def breaks(self):
        return [_cauchy_breaks(self.loc, self.scale)]

    def entropy_closed(self):
        return math.log(4 * math.pi * self.scale)

    def fisher_closed(self):
        return np.array([[0.5 / self.scale**2]])

    def smoothed(self, noise_cov):
        v = float(np.asarray(noise_cov).reshape(-1)[0])
        return self if v == 0 else _SmoothedCauchy(self.loc, self.scale, v)

    def scaled(self, c):
        return Cauchy1D(c * self.loc, abs(c) * self.scale)

    def shifted(self, b):
        return Cauchy1D(self.loc + float(np.ravel(b)[0]), self.scale)


# ----------------------------------------------------------------------
# closed-form Gaussian smoothings (internal)


# offsets, in smoothing widths, of the panels placed around a smoothed kink or jump;
# nodes of a wide panel would otherwise never sample the narrow transition
SMOOTHING_BREAKS = (-12.0, -4.0, -1.0, 0.0, 1.0, 4.0, 12.0)


def _smoothing_breaks(centers, s):
    return tuple(sorted({float(c + k * s) for c in centers for k in SMOOTHING_BREAKS}))


class _Smoothed1D(Distribution):
    def __init__(self, v):
        self.v = float(v)
        self.s = math.sqrt(self.v)

    def density(self, x):
        return self.pdf(x), 0.0

    def grad_pdf(self, x):
        x = _points(x, 1)
        return self.pdf(x)[:, None] * self.score(x)


class _SmoothedLaplace(_Smoothed1D):
    def __init__(self, loc, b, v):
        super().__init__(v)
        self.loc, self.b = float(loc), float(b)
        self._near_gauss = None
        if self.b < NEGLIGIBLE_LAPLACE_RATIO * self.s:
            # the branch difference cancels to ~b/s relative precision here
            self._near_gauss = GaussianND([self.loc], [[self.v + 2 * self.b**2]])

    def _parts(self, x):
        """Both exponential branches of the density, shifted by v / (2 b^2).

        With z = s/b -+ u/s, a branch equals -u/b + v/(2b^2) + log Phi(-z); for
        z > 0 it is rewritten through erfcx so the large terms cancel exactly.
        """
        u = _points(x, 1)[:, 0] - self.loc
        s, b = self.s, self.b

        def branch(sign):
            z = s / b - sign * u / s
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                stable = -0.5 * (u / s) ** 2 + np.log(0.5 * special.erfcx(np.maximum(z, 0.0) / _SQRT2))
                direct = -sign * u / b + self.v / (2 * b * b) + special.log_ndtr(-z)
            return np.where(z > 0, stable, direct)

        return branch(1.0), branch(-1.0)

    def logpdf(self, x):
        if self._near_gauss is not None:
            return self._near_gauss.logpdf(x)
        la, lb = self._parts(x)
        return -math.log(2 * self.b) + np.logaddexp(la, lb)

    def score(self, x):
        if self._near_gauss is not None:
            return self._near_gauss.score(x)
        la, lb = self._parts(x)
        return (np.tanh(0.5 * (lb - la)) / self.b)[:, None]

    def pdf_and_grad(self, x):
        if self._near_gauss is not None:
            return self._near_gauss.pdf_and_grad(x)
        la, lb = self._parts(x)
        p = np.exp(-math.log(2 * self.b) + np.logaddexp(la, lb))
        return p, (p * np.tanh(0.5 * (lb - la)) / self.b)[:, None]

    def mean_cov(self):
        return np.array([self.loc]), np.array([[2 * self.b**2 + self.v]])

    def draw(self, rng, count):
        return rng.laplace(self.loc, self.b, (count, 1)) + self.s * rng.standard_normal((count, 1))

    def box(self):
        w = LAPLACE_TAIL_SCALES * self.b + TRUNCATION_SIGMAS * self.s
        return np.array([self.loc - w]), np.array([self.loc + w])

    def breaks(self):
        return [_smoothing_breaks((self.loc,), self.s)]

    def smoothed(self, noise_cov):
        return _SmoothedLaplace(self.loc, self.b, self.v + float(np.ravel(noise_cov)[0]))


class _LaplacePair(Distribution):
    """Sum of independent Laplace(0, b1) and Laplace(0, b2), shifted to loc.

    Partial fractions of the characteristic functions give
    f(a) = (b1 exp(-a/b1) - b2 exp(-a/b2)) / (2 (b1^2 - b2^2)) with a = |y - loc|;
    it is evaluated through expm1 so nearly equal scales do not cancel.
    """

    def __init__(self, loc, b1, b2):
        self.loc = float(loc)
        self.b1, self.b2 = max(b1, b2), min(b1, b2)
        self.d = self.b1 - self.b2
        self.kappa = self.d / (self.b1 * self.b2)
        self.log_ratio = math.log1p(-self.d / self.b1)

    def _abs(self, x):
        return np.abs(_points(x, 1)[:, 0] - self.loc)

    def logpdf(self, x):
        a, b1 = self._abs(x), self.b1
        if self.d == 0:
            return np.log(b1 + a) - a / b1 - math.log(4 * b1 * b1)
        num = np.log(-np.expm1(self.log_ratio - a * self.kappa))
        den = math.log(2 * b1) + math.log(-math.expm1(2 * self.log_ratio))
        return -a / self.b1 + num - den

    def score(self, x):
        u = _points(x, 1)[:, 0] - self.loc
        a = np.abs(u)
        if self.d == 0:
            g = 1.0 / (self.b1 + a) - 1.0 / self.b1
        else:
            with np.errstate(divide="ignore"):
                g = -1.0 / self.b1 + self.kappa / np.expm1(a * self.kappa - self.log_ratio)
        return (np.sign(u) * g)[:, None]

    def pdf_and_grad(self, x):
        p = self.pdf(x)
        return p, p[:, None] * self.score(x)

    def grad_pdf(self, x):
        return self.pdf_and_grad(x)[1]

    def mean_cov(self):
        return np.array([self.loc]), np.array([[2 * (self.b1**2 + self.b2**2)]])

    def draw(self, rng, count):
        return rng.laplace(self.loc, self.b1, (count, 1)) + rng.laplace(0.0, self.b2, (count, 1))

    def box(self):
        w = LAPLACE_TAIL_SCALES * (self.b1 + self.b2)
        return np.array([self.loc - w]), np.array([self.loc + w])

    def kinks(self):
        return (self.loc,)


class _SmoothedUniform(_Smoothed1D):
    def __init__(self, lower, upper, v):
        super().__init__(v)
        self.lower, self.upper = float(lower), float(upper)

    def logpdf(self, x):
        y = _points(x, 1)[:, 0]
        a = (y - self.lower) / self.s
        c = (y - self.upper) / self.s
        # log(Phi(a) - Phi(c)) with a > c, evaluated on the numerically safer tail
        right = (a + c) > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            hi = np.where(right, special.log_ndtr(-c), special.log_ndtr(a))
            lo = np.where(right, special.log_ndtr(-a), special.log_ndtr(c))
            out = hi + np.log1p(-np.exp(lo - hi))
        return out - math.log(self.upper - self.lower)

    def pdf(self, x):
        # same tail choice as logpdf; the difference of two upper-tail
        # probabilities keeps full relative accuracy while the width is not tiny
        y = _points(x, 1)[:, 0]
        a = (y - self.lower) / self.s
        c = (y - self.upper) / self.s
        right = (a + c) > 0
        p = np.where(right, special.ndtr(-c) - special.ndtr(-a), special.ndtr(a) - special.ndtr(c))
        return np.maximum(p, 0.0) / (self.upper - self.lower)

    def pdf_and_grad(self, x):
        y = _points(x, 1)[:, 0]
        a = (y - self.lower) / self.s
        c = (y - self.upper) / self.s
        right = (a + c) > 0
        w = self.upper - self.lower
        p = np.where(right, special.ndtr(-c) - special.ndtr(-a), special.ndtr(a) - special.ndtr(c))
        g = (np.exp(-0.5 * a * a) - np.exp(-0.5 * c * c)) / (math.sqrt(2 * math.pi) * self.s * w)
        return np.maximum(p, 0.0) / w, g[:, None]

    def score(self, x):
        y = _points(x, 1)[:, 0]
        a = (y - self.lower) / self.s
        c = (y - self.upper) / self.s
        lp = self.logpdf(y[:, None]) + math.log(self.upper - self.lower)
        g = (np.exp(-0.5 * a * a - lp) - np.exp(-0.5 * c * c - lp)) / (math.sqrt(2 * math.pi) * self.s)
        return g[:, None]

    def mean_cov(self):
        w = self.upper - self.lower
        return np.array([0.5 * (self.lower + self.upper)]), np.array([[w * w / 12.0 + self.v]])

    def draw(self, rng, count):
        return rng.uniform(self.lower, self.upper, (count, 1)) + self.s * rng.standard_normal((count, 1))

    def box(self):
        w = TRUNCATION_SIGMAS * self.s
        return np.array([self.lower - w]), np.array([self.upper + w])

    def breaks(self):
        return [_smoothing_breaks((self.lower, self.upper), self.s)]

    def smoothed(self, noise_cov):
        return _SmoothedUniform(self.lower, self.upper, self.v + float(np.ravel(noise_cov)[0]))


class _SmoothedUniformPair(_Smoothed1D):
    """Sum of two independent uniforms (a trapezoid) plus N(0, v).

    The trapezoid is a signed sum of four ramps max(x - k, 0); each ramp
    smooths to R(u) = s phi(u/s) + u Phi(u/s).  Right of the centre the
    identity R(u) = u + R(-u) is used so the linear parts cancel exactly and
    only Gaussian-tail-sized terms remain.
    """

    def __init__(self, first, second, v):
        super().__init__(v)
        (l1, h1), (l2, h2) = first, second
        self.knots = np.array([l1 + l2, l1 + h2, h1 + l2, h1 + h2])
        self.signs = np.array([1.0, -1.0, -1.0, 1.0])
        self.area = (h1 - l1) * (h2 - l2)
        self.widths = (h1 - l1, h2 - l2)
        self.centre = 0.5 * (self.knots[0] + self.knots[3])

    def _terms(self, x):
        y = _points(x, 1)[:, 0]
        right = y > self.centre
        # signed distance to each knot, reflected on the right so every term is a left tail
        u = np.where(right[:, None], self.knots[None, :] - y[:, None], y[:, None] - self.knots[None, :])
        return u / self.s, right

    def pdf(self, x):
        z, _ = self._terms(x)
        return np.maximum(self._ramps(z) @ self.signs * self.s / self.area, 0.0)

    @staticmethod
    def _ramps(z):
        # R(u)/s = phi(z) + z Phi(z); for z < 0 through the Mills ratio to avoid cancellation
        phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        neg = z < 0
        mills = math.sqrt(math.pi / 2) * special.erfcx(-np.where(neg, z, 0.0) / math.sqrt(2))
        return np.where(neg, phi * (1.0 + z * mills), phi + z * special.ndtr(z))

    def pdf_and_grad(self, x):
        z, right = self._terms(x)
        p = np.maximum(self._ramps(z) @ self.signs * self.s / self.area, 0.0)
        g = (special.ndtr(z) @ self.signs) / self.area
        return p, np.where(right, -g, g)[:, None]

    def grad_pdf(self, x):
        return self.pdf_and_grad(x)[1]

    def score(self, x):
        p, g = self.pdf_and_grad(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return g / p[:, None]

    def mean_cov(self):
        w1, w2 = self.widths
        return np.array([self.centre]), np.array([[(w1 * w1 + w2 * w2) / 12.0 + self.v]])

    def draw(self, rng, count):
        w1, w2 = self.widths
        return (self.knots[0] + rng.uniform(0.0, w1, (count, 1)) + rng.uniform(0.0, w2, (count, 1))
                + self.s * rng.standard_normal((count, 1)))

    def box(self):
        w = TRUNCATION_SIGMAS * self.s
        return np.array([self.knots[0] - w]), np.array([self.knots[3] + w])

    def breaks(self):
        return [_smoothing_breaks(self.knots, self.s)]

    def smoothed(self, noise_cov):
        out = object.__new__(_SmoothedUniformPair)
        out.__dict__.update(self.__dict__)
        _Smoothed1D.__init__(out, self.v + float(np.ravel(noise_cov)[0]))
        return out


class _SmoothedCauchy(_Smoothed1D):
    def __init__(self, loc, gamma, v):
        super().__init__(v)
        self.loc, self.gamma = float(loc), float(gamma)

    def _w(self, x):
        u = _points(x, 1)[:, 0] - self.loc
        z = (u + 1j * self.gamma) / (self.s * _SQRT2)
        return z, special.wofz(z)

    def pdf(self, x):
        u = _points(x, 1)[:, 0] - self.loc
        return special.voigt_profile(u, self.s, self.gamma)

    def logpdf(self, x):
        return np.log(self.pdf(x))

    def score(self, x):
        z, w = self._w(x)
        dw = -2 * z * w + 2j / math.sqrt(math.pi)
        return (dw.real / (w.real * self.s * _SQRT2))[:, None]

    def mean_cov(self):
        raise HeavyTail("the Cauchy law has no finite covariance")

    def draw(self, rng, count):
        return (self.loc + self.gamma * rng.standard_cauchy((count, 1))
                + self.s * rng.standard_normal((count, 1)))

    def box(self):
        w = CAUCHY_TAIL_SCALES * self.gamma + TRUNCATION_SIGMAS * self.s
        return np.array([self.loc - w]), np.array([self.loc + w])

    def breaks(self):
        return [_cauchy_breaks(self.loc, max(self.gamma, self.s))]

    def smoothed(self, noise_cov):
        return _SmoothedCauchy(self.loc, self.gamma, self.v + float(np.ravel(noise_cov)[0]))


# ----------------------------------------------------------------------
# composites


@dataclass(frozen=True, eq=False)
class MixtureND(Distribution):
    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        comps = tuple(self.components)
        if len(comps) == 0 or len(comps) != w.size:
            raise DimensionMismatch("weights and components must have equal nonzero length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("mixture weights must be nonnegative and sum to 1")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise DimensionMismatch("mixture components differ in dimension")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def dim(self):
        return self.components[0].dim

    @property
    def has_jumps(self):
        return any(c.has_jumps for c in self.components)

    @property
    def is_gaussian(self):
        live = [c for c, w in zip(self.components, self.weights) if w > 0]
        if not all(c.impl.is_gaussian for c in live):
            return False
        m0, c0 = live[0].mean_cov()
        return all(np.allclose(c.mean_cov()[0], m0, rtol=0, atol=1e-14)
                   and np.allclose(c.mean_cov()[1], c0, rtol=0, atol=1e-14) for c in live)

    @property
    def score_is_exact(self):
        return all(c.score_is_exact for c in self.components)

    def _live(self):
        return [(w, c) for w, c in zip(self.weights, self.components) if w > 0]

    def logpdf(self, x):
        x = _points(x, self.dim)
        logs = np.stack([math.log(w) + c.logpdf(x) for w, c in self._live()])
        with np.errstate(invalid="ignore"):
            return special.logsumexp(logs, axis=0)

    def pdf(self, x):
        x = _points(x, self.dim)
        return sum(w * c.pdf(x) for w, c in self._live())

    def density(self, x):
        x = _points(x, self.dim)
        val = np.zeros(x.shape[0])
        err = 0.0
        for w, c in self._live():
            p, e = c.density(x)
            val += w * p
            err += w * e
        return val, err

    def grad_pdf(self, x):
        x = _points(x, self.dim)
        return sum(w * c.grad_pdf(x) for w, c in self._live())

    def pdf_and_grad(self, x):
        x = _points(x, self.dim)
        p = np.zeros(x.shape[0])
        g = np.zeros_like(x)
        for w, c in self._live():
            pc, gc = c.pdf_and_grad(x)
            p += w * pc
            g += w * gc
        return p, g

    def score(self, x):
        x = _points(x, self.dim)
        live = self._live()
        logs = np.stack([math.log(w) + c.logpdf(x) for w, c in live])
        resp = np.exp(logs - special.logsumexp(logs, axis=0))
        return sum(r[:, None] * c.score(x) for r, (w, c) in zip(resp, live))

    def mean_cov(self):
        stats = [c.mean_cov() for c in self.components]
        mean = sum(w * m for w, (m, _) in zip(self.weights, stats))
        cov = sum(w * (c + np.outer(m - mean, m - mean)) for w, (m, c) in zip(self.weights, stats))
        return mean, cov

    def draw(self, rng, count):
        labels = rng.choice(len(self.components), size=count, p=self.weights)
        out = np.empty((count, self.dim))
        for i, c in enumerate(self.components):
            idx = np.flatnonzero(labels == i)
            if idx.size:
                out[idx] = c.draw(rng, idx.size)
        return out

    def box(self):
        boxes = [c.box() for _, c in self._live()]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def breaks(self):
        per = [c.breaks() for _, c in self._live()]
        return [tuple(sorted(set().union(*[set(p[j]) for p in per]))) for j in range(self.dim)]

    def kinks(self):
        return tuple(sorted(set().union(*[set(c.kinks()) for _, c in self._live()])))

    def smoothed(self, noise_cov):
        comps = [c.impl.smoothed(noise_cov) for c in self.components]
        if any(c is None for c in comps):
            return None
        return _InternalMixture(self.weights, comps)

    def scaled(self, c):
        return MixtureND(self.weights, [comp.scaled(c) for comp in self.components])

    def shifted(self, b):
        return MixtureND(self.weights, [comp.shifted(b) for comp in self.components])


class _InternalMixture(MixtureND):
    """Mixture whose components may be internal objects."""

    def __init__(self, weights, components):
        object.__setattr__(self, "weights", np.asarray(weights, dtype=float))
        object.__setattr__(self, "components", tuple(components))


@dataclass(frozen=True, eq=False)
class ProductND(Distribution):
    marginals: tuple

    def __post_init__(self):
        margs = tuple(self.marginals)
        if not margs:
            raise DimensionMismatch("product needs at least one marginal")
        if any(m.dim != 1 for m in margs):
            raise DimensionMismatch("product marginals must be one-dimensional")
        object.__setattr__(self, "marginals", margs)

    @property
    def dim(self):
        return len(self.marginals)

    @property
    def has_jumps(self):
        return any(m.has_jumps for m in self.marginals)

    @property
    def is_gaussian(self):
        return all(m.impl.is_gaussian for m in self.marginals)

    @property
    def score_is_exact(self):
        return all(m.score_is_exact for m in self.marginals)

    def logpdf(self, x):
        x = _points(x, self.dim)
        return sum(m.logpdf(x[:, j:j + 1]) for j, m in enumerate(self.marginals))

    def density(self, x):
        x = _points(x, self.dim)
        vals, errs = zip(*[m.density(x[:, j:j + 1]) for j, m in enumerate(self.marginals)])
        p = np.prod(vals, axis=0)
        rel = 0.0
        for v, e in zip(vals, errs):
            if e:
                rel += e / max(float(np.max(v)), 1e-300)
        return p, rel * float(np.max(p)) if p.size else 0.0

    def score(self, x):
        x = _points(x, self.dim)
        return np.hstack([m.score(x[:, j:j + 1]) for j, m in enumerate(self.marginals)])

    def pdf_and_grad(self, x):
        x = _points(x, self.dim)
        pg = [m.pdf_and_grad(x[:, j:j + 1]) for j, m in enumerate(self.marginals)]
        ps = np.stack([p for p, _ in pg])
        p = np.prod(ps, axis=0)
        g = np.empty_like(x)
        for j, (_, gj) in enumerate(pg):
            others = np.prod(np.delete(ps, j, axis=0), axis=0) if self.dim > 1 else 1.0
            g[:, j] = gj[:, 0] * others
        return p, g

    def grad_pdf(self, x):
        return self.pdf_and_grad(x)[1]

    def mean_cov(self):
        stats = [m.mean_cov() for m in self.marginals]
        return np.concatenate([s[0] for s in stats]), np.diag([float(s[1][0, 0]) for s in stats])

    def draw(self, rng, count):
        return np.hstack([m.draw(rng, count) for m in self.marginals])

    def box(self):
        boxes = [m.box() for m in self.marginals]
        return np.concatenate([b[0] for b in boxes]), np.concatenate([b[1] for b in boxes])

    def breaks(self):
        return [m.breaks()[0] for m in self.marginals]

    def kinks(self):
        return self.marginals[0].kinks() if self.dim == 1 else ()

    def entropy_closed(self):
        vals = [m.entropy_closed() for m in self.marginals]
        return None if any(v is None for v in vals) else float(sum(vals))

    def fisher_closed(self):
        vals = [m.fisher_closed() for m in self.marginals]
        return None if any(v is None for v in vals) else np.diag([float(v[0, 0]) for v in vals])

    def smoothed(self, noise_cov):
        k = np.asarray(noise_cov, dtype=float)
        if np.count_nonzero(k - np.diag(np.diag(k))):
            if self.is_gaussian:
                m, c = self.mean_cov()
                return GaussianND(m, c + k)
            return None
        margs = [m.impl.smoothed(np.array([[k[j, j]]])) for j, m in enumerate(self.marginals)]
        if any(m is None for m in margs):
            return None
        return _InternalProduct(margs)

    def scaled(self, c):
        return ProductND([m.scaled(c) for m in self.marginals])

    def shifted(self, b):
        b = np.broadcast_to(np.asarray(b, dtype=float), (self.dim,))
        return ProductND([m.shifted(bj) for m, bj in zip(self.marginals, b)])


class _InternalProduct(ProductND):
    def __init__(self, marginals):
        object.__setattr__(self, "marginals", tuple(marginals))


class _Affine(Distribution):
    """Invertible linear image y = A x of an n-dimensional law."""

    def __init__(self, A, base):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.base = base
        self.dim = self.A.shape[0]
        self.Ainv = np.linalg.inv(self.A)
        self.logdet = float(np.log(abs(np.linalg.det(self.A))))

    @property
    def has_jumps(self):
        return self.base.has_jumps

    @property
    def score_is_exact(self):
        return self.base.score_is_exact

    def _pre(self, x):
        return _points(x, self.dim) @ self.Ainv.T

    def logpdf(self, x):
        return self.base.logpdf(self._pre(x)) - self.logdet

    def density(self, x):
        p, e = self.base.density(self._pre(x))
        j = math.exp(-self.logdet)
        return p * j, e * j

    def score(self, x):
        return self.base.score(self._pre(x)) @ self.Ainv

    def pdf_and_grad(self, x):
        p, g = self.base.pdf_and_grad(self._pre(x))
        j = math.exp(-self.logdet)
        return p * j, (g @ self.Ainv) * j

    def grad_pdf(self, x):
        return self.pdf_and_grad(x)[1]

    def mean_cov(self):
        m, c = self.base.mean_cov()
        return self.A @ m, self.A @ c @ self.A.T

    def draw(self, rng, count):
        return self.base.draw(rng, count) @ self.A.T

    def box(self):
        lo, hi = self.base.box()
        corners = np.array(np.meshgrid(*[[l, h] for l, h in zip(lo, hi)], indexing="ij"))
        corners = corners.reshape(self.dim, -1).T @ self.A.T
        return corners.min(0), corners.max(0)

    def breaks(self):
        if self.dim == 1:
            return [tuple(sorted(self.A[0, 0] * np.asarray(self.base.breaks()[0])))]
        m = np.zeros(self.dim)
        try:
            m = self.mean_cov()[0]
        except HeavyTail:
            pass
        return [(float(v),) for v in m]

    def kinks(self):
        if self.dim != 1:
            return ()
        return tuple(sorted(self.A[0, 0] * np.asarray(self.base.kinks())))

    def smoothed(self, noise_cov):
        inner = self.Ainv @ np.asarray(noise_cov, dtype=float) @ self.Ainv.T
        inner = 0.5 * (inner + inner.T)
        b = self.base.smoothed(inner)
        return None if b is None else _Affine(self.A, b)


class _Conv(Distribution):
    """Density of A + B for independent one-dimensional laws, by quadrature.

    B must be the smoother factor: derivatives are taken through B.
    """

    def __init__(self, a, b):
        self.a, self.b = a, b
        self.dim = 1

    @property
    def has_jumps(self):
        return self.a.has_jumps and self.b.has_jumps

    score_is_exact = True

    def _edges(self, y):
        alo, ahi = (float(v[0]) for v in self.a.box())
        blo, bhi = (float(v[0]) for v in self.b.box())
        lo = np.maximum(alo, y - bhi)
        hi = np.maximum(np.minimum(ahi, y - blo), lo)
        pa = np.asarray(self.a.breaks()[0], dtype=float)
        pb = np.asarray(self.b.breaks()[0], dtype=float)
        pts = np.concatenate([np.broadcast_to(pa, (y.size, pa.size)), y[:, None] - pb[None, :]], axis=1)
        pts = np.clip(pts, lo[:, None], hi[:, None])
        return np.sort(np.concatenate([lo[:, None], pts, hi[:, None]], axis=1), axis=1)

    def _integrate(self, y, grad):
        y = _points(y, 1)[:, 0]
        if y.size == 0:
            return np.zeros((2 if grad else 1, 0)), 0.0
        if grad and self.b.has_jumps:
            raise NonSmoothDensity("sum of laws with jumps has no differentiable factor")

        def f(x, rows):
            shape = x.shape
            xa = x.reshape(-1, 1)
            xb = (y[rows, None] - x).reshape(-1, 1)
            pa = self.a.pdf(xa)
            if grad:
                pb, gb = self.b.pdf_and_grad(xb)
                return np.stack([(pa * pb).reshape(shape), (pa * gb[:, 0]).reshape(shape)])
            return (pa * self.b.pdf(xb)).reshape((1,) + shape)

        val, gap = segmented_quadrature(f, self._edges(y))
        return val, gap

    def pdf(self, x):
        return np.clip(self._integrate(x, False)[0][0], 0.0, None)

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def density(self, x):
        v, gap = self._integrate(x, False)
        return np.clip(v[0], 0.0, None), gap

    def pdf_and_grad(self, x):
        v, _ = self._integrate(x, True)
        return np.clip(v[0], 0.0, None), v[1][:, None]

    def grad_pdf(self, x):
        return self.pdf_and_grad(x)[1]

    def score(self, x):
        p, g = self.pdf_and_grad(x)
        if np.any(p <= 0):
            raise DomainError("score requested where the density vanishes")
        return g / p[:, None]

    def mean_cov(self):
        ma, ca = self.a.mean_cov()
        mb, cb = self.b.mean_cov()
        return ma + mb, ca + cb

    def draw(self, rng, count):
        return self.a.draw(rng, count) + self.b.draw(rng, count)

    def box(self):
        (alo, ahi), (blo, bhi) = self.a.box(), self.b.box()
        return alo + blo, ahi + bhi

    def breaks(self):
        pa, pb = self.a.breaks()[0], self.b.breaks()[0]
        if not pa or not pb:
            return [tuple(pa) + tuple(pb)]
        return [tuple(sorted({round(u + v, 14) for u in pa for v in pb}))]

    def kinks(self):
        ka, kb = self.a.kinks(), self.b.kinks()
        if not ka or not kb:
            return ()
        return tuple(sorted({u + v for u in ka for v in kb}))

    def smoothed(self, noise_cov):
        b = self.b.smoothed(noise_cov)
        return None if b is None else _Conv(self.a, b)


class _Fiber(Distribution):
    """Image A x of a product law in R^m under an (m-1) x m full-rank matrix.

    The density integrates the product density along the null direction.
    """

    def __init__(self, A, marginals):
        self.A = np.asarray(A, dtype=float)
        self.margs = list(marginals)
        self.dim = self.A.shape[0]
        _, _, vt = np.linalg.svd(self.A)
        self.u = vt[-1]
        self.pinv = self.A.T @ np.linalg.inv(self.A @ self.A.T)
        self.jac = abs(float(np.linalg.det(np.vstack([self.A, self.u]))))

    @property
    def has_jumps(self):
        return any(m.has_jumps for m in self.margs)

    def _edges(self, x0):
        k = x0.shape[0]
        lo = np.full(k, -np.inf)
        hi = np.full(k, np.inf)
        pts = []
        for j, m in enumerate(self.margs):
            uj = self.u[j]
            if abs(uj) < 1e-12:
                continue
            blo, bhi = (float(v[0]) for v in m.box())
            w1 = (blo - x0[:, j]) / uj
            w2 = (bhi - x0[:, j]) / uj
            lo = np.maximum(lo, np.minimum(w1, w2))
            hi = np.minimum(hi, np.maximum(w1, w2))
            # only non-smooth points; the box already localizes smooth marginals
            br = np.asarray(m.kinks(), dtype=float)
            if br.size:
                pts.append((br[None, :] - x0[:, j:j + 1]) / uj)
        hi = np.maximum(hi, lo)
        allp = np.concatenate(pts, axis=1) if pts else np.zeros((k, 0))
        allp = np.clip(allp, lo[:, None], hi[:, None])
        return np.sort(np.concatenate([lo[:, None], allp, hi[:, None]], axis=1), axis=1)

    def _integrate(self, y, grad):
        y = _points(y, self.dim)
        x0 = y @ self.pinv.T
        def f(w, rows):
            shape = w.shape
            xs = x0[rows, None, :] + w[:, :, None] * self.u[None, None, :]
            pg = [m.pdf_and_grad(xs[:, :, j].reshape(-1, 1)) if grad else (m.pdf(xs[:, :, j].reshape(-1, 1)), None)
                  for j, m in enumerate(self.margs)]
            ps = [p for p, _ in pg]
            out = [np.prod(ps, axis=0).reshape(shape)]
            if grad:
                for j in range(len(ps)):
                    others = np.prod([q for i, q in enumerate(ps) if i != j], axis=0)
                    out.append((pg[j][1][:, 0] * others).reshape(shape))
            return np.stack(out)

        if grad and self.has_jumps:
            raise NonSmoothDensity("image of a law with jumps")
        val, gap = segmented_quadrature(f, self._edges(x0), panels=FIBER_PANELS)
        val = val / self.jac
        return val, gap / self.jac

    def pdf(self, x):
        return np.clip(self._integrate(x, False)[0][0], 0.0, None)

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def density(self, x):
        v, gap = self._integrate(x, False)
        return np.clip(v[0], 0.0, None), gap

    def pdf_and_grad(self, x):
        v, _ = self._integrate(x, True)
        grad_x = v[1:].T
        return np.clip(v[0], 0.0, None), grad_x @ self.pinv

    def grad_pdf(self, x):
        return self.pdf_and_grad(x)[1]

    def score(self, x):
        p, g = self.pdf_and_grad(x)
        return g / p[:, None]

    def mean_cov(self):
        m, c = ProductND(self.margs).mean_cov()
        return self.A @ m, self.A @ c @ self.A.T

    def draw(self, rng, count):
        return np.hstack([m.draw(rng, count) for m in self.margs]) @ self.A.T

    def box(self):
        boxes = [m.box() for m in self.margs]
        lo = np.array([float(b[0][0]) for b in boxes])
        hi = np.array([float(b[1][0]) for b in boxes])
        a = self.A
        return (np.minimum(a * lo, a * hi).sum(1), np.maximum(a * lo, a * hi).sum(1))

    def breaks(self):
        centers = np.array([np.mean(m.breaks()[0]) if m.breaks()[0] else 0.0 for m in self.margs])
        return [(float(v),) for v in self.A @ centers]

    def smoothed(self, noise_cov):
        k = np.asarray(noise_cov, dtype=float)
        gram = self.A @ self.A.T
        c = float(np.trace(k) / np.trace(gram))
        if not np.allclose(k, c * gram, atol=1e-12):
            return None
        margs = [m.smoothed(np.array([[c]])) for m in self.margs]
        if any(m is None for m in margs):
            return None
        return _Fiber(self.A, margs)


class _GaussianPlusLine(Distribution):
    """Law of G + d X with G ~ N(mean, cov) in R^r and a 1-D law X along d.

    Completing the square in t splits the Gaussian into a part orthogonal to
    d (in the metric of cov) and a 1-D Gaussian in t centred at mu(y); the
    integral over t is then the density of X + N(0, 1/kappa) at mu(y), where
    kappa = d' cov^-1 d.
    """

    def __init__(self, mean, cov, direction, law):
        self.mean = np.asarray(mean, dtype=float)
        self.cov = np.asarray(cov, dtype=float)
        self.d = np.asarray(direction, dtype=float)
        self.dim = self.mean.size
        self.law = law
        self.prec = np.linalg.inv(self.cov)
        self.pd = self.prec @ self.d
        self.kappa = float(self.d @ self.pd)
        self.smooth = law.smoothed(np.array([[1.0 / self.kappa]]))
        _, logdet = np.linalg.slogdet(self.cov)
        self.const = -0.5 * ((self.dim - 1) * math.log(2 * math.pi) + logdet + math.log(self.kappa))

    def _split(self, x):
        dy = _points(x, self.dim) - self.mean
        mu = dy @ self.pd / self.kappa
        q = np.einsum("ij,jk,ik->i", dy, self.prec, dy) - self.kappa * mu * mu
        return dy, mu, np.maximum(q, 0.0)

    def logpdf(self, x):
        _, mu, q = self._split(x)
        return self.const - 0.5 * q + self.smooth.logpdf(mu[:, None])

    def score(self, x):
        dy, mu, _ = self._split(x)
        s1 = self.smooth.score(mu[:, None])[:, 0]
        return -dy @ self.prec + np.outer(mu + s1 / self.kappa, self.pd)

    def pdf_and_grad(self, x):
        dy, mu, q = self._split(x)
        p1, g1 = self.smooth.pdf_and_grad(mu[:, None])
        e = np.exp(self.const - 0.5 * q)
        p = e * p1
        g = p[:, None] * (-dy @ self.prec + np.outer(mu, self.pd)) + (e * g1[:, 0] / self.kappa)[:, None] * self.pd
        return p, g

    def grad_pdf(self, x):
        return self.pdf_and_grad(x)[1]

    def mean_cov(self):
        m, v = self.law.mean_cov()
        return self.mean + self.d * float(m[0]), self.cov + float(v[0, 0]) * np.outer(self.d, self.d)

    def draw(self, rng, count):
        g = rng.multivariate_normal(self.mean, self.cov, count)
        return g + self.law.draw(rng, count) * self.d[None, :]

    def box(self):
        sd = np.sqrt(np.diag(self.cov))
        lo, hi = (float(b[0]) for b in self.law.box())
        return (self.mean - TRUNCATION_SIGMAS * sd + np.minimum(self.d * lo, self.d * hi),
                self.mean + TRUNCATION_SIGMAS * sd + np.maximum(self.d * lo, self.d * hi))

    def breaks(self):
        pts = self.law.breaks()[0] or (float(self.law.mean_cov()[0][0]),)
        return [tuple(sorted({float(self.mean[j] + self.d[j] * k) for k in pts})) for j in range(self.dim)]


MIXTURE_EXPANSION_LIMIT = 64


def _expand_gaussian_mixtures(a, marginals):
    """A X for independent 1-D marginals, as a mixture of closed-form laws.

    Gaussian-mixture marginals are expanded into their components; every
    resulting term must have at most one non-Gaussian coordinate and a
    nondegenerate Gaussian image.  Returns None when that does not hold.
    """
    options = []
    for mg in marginals:
        if mg.dim != 1:
            return None
        if isinstance(mg, GaussianND):
            options.append([(1.0, mg)])
        elif isinstance(mg, MixtureND) and all(isinstance(c.impl, GaussianND) for _, c in mg._live()):
            options.append([(w, c.impl) for w, c in mg._live()])
        else:
            options.append([(1.0, mg)])
    if math.prod(len(o) for o in options) > MIXTURE_EXPANSION_LIMIT:
        return None
    weights, comps = [], []
    r = a.shape[0]
    for combo in itertools.product(*options):
        other = [j for j, (_, d) in enumerate(combo) if not isinstance(d, GaussianND)]
        if len(other) > 1:
            return None
        mean = np.zeros(r)
        cov = np.zeros((r, r))
        for j, (_, d) in enumerate(combo):
            if j not in other:
                mean += a[:, j] * float(d.mean[0])
                cov += float(d.cov[0, 0]) * np.outer(a[:, j], a[:, j])
        eig = np.linalg.eigvalsh(cov)
        if eig[0] <= 1e-10 * max(eig[-1], 1e-300):
            return None
        if other:
            comp = _GaussianPlusLine(mean, cov, a[:, other[0]], combo[other[0]][1])
            if comp.smooth is None:
                return None
        else:
            comp = GaussianND(mean, cov)
        weights.append(math.prod(w for w, _ in combo))
        comps.append(comp)
    return comps[0] if len(comps) == 1 else _InternalMixture(weights, comps)


class _Delegating(Distribution):
    """Public composite variant that evaluates through a resolved object."""

    @property
    def has_jumps(self):
        return self.impl.has_jumps

    @property
    def is_gaussian(self):
        return self.impl.is_gaussian

    @property
    def score_is_exact(self):
        return self.impl.score_is_exact

    def logpdf(self, x):
        return self.impl.logpdf(x)

    def pdf(self, x):
        return self.impl.pdf(x)

    def density(self, x):
        return self.impl.density(x)

    def score(self, x):
        return self.impl.score(x)

    def grad_pdf(self, x):
        return self.impl.grad_pdf(x)

    def pdf_and_grad(self, x):
        return self.impl.pdf_and_grad(x)

    def mean_cov(self):
        return self.impl.mean_cov()

    def draw(self, rng, count):
        return self.impl.draw(rng, count)

    def box(self):
        return self.impl.box()

    def breaks(self):
        return self.impl.breaks()

    def kinks(self):
        return self.impl.kinks()

    def entropy_closed(self):
        return self.impl.entropy_closed()

    def fisher_closed(self):
        return self.impl.fisher_closed()

    def smoothed(self, noise_cov):
        return self.impl.smoothed(noise_cov)


@dataclass(frozen=True, eq=False)
class GaussianSmoothed(_Delegating):
    """Law of base + sqrt(t) * Z with Z ~ N(0, noise_cov)."""

    base: Distribution
    t: float
    noise_cov: np.ndarray

    def __post_init__(self):
        if not self.t >= 0:
            raise DomainError("smoothing level t must be nonnegative")
        k = _sym_matrix(self.noise_cov, "noise_cov", pd=False)
        if k.shape[0] != self.base.dim:
            raise DimensionMismatch("noise_cov does not match the base dimension")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "noise_cov", k)

    @property
    def dim(self):
        return self.base.dim

    @cached_property
    def impl(self):
        k = self.t * self.noise_cov
        if not np.any(k):
            return self.base.impl
        if isinstance(self.base, IndependentSum):
            # the noise joins the sum, where it smooths the last factor in closed form
            return IndependentSum(np.append(self.base.coeffs, 1.0),
                                  self.base.components + (GaussianND(np.zeros(1), k),)).impl
        out = self.base.impl.smoothed(k)
        if out is None:
            if self.dim != 1:
                raise UnsupportedConvolution(
                    f"Gaussian smoothing of {type(self.base).__name__} in dimension {self.dim}"
                )
            out = _Conv(self.base.impl, GaussianND(np.zeros(1), k))
        return out

    def mean_cov(self):
        m, c = self.base.mean_cov()
        return m, c + self.t * self.noise_cov

    def scaled(self, c):
        return GaussianSmoothed(self.base.scaled(c), self.t, c * c * self.noise_cov)

    def shifted(self, b):
        return GaussianSmoothed(self.base.shifted(b), self.t, self.noise_cov)


@dataclass(frozen=True, eq=False)
class LinearImage(_Delegating):
    """Law of A X for a full-row-rank matrix A."""

    matrix: np.ndarray
    base: Distribution

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if a.shape[1] != self.base.dim:
            raise DimensionMismatch(f"matrix has {a.shape[1]} columns, base has dimension {self.base.dim}")
        if a.shape[0] > a.shape[1] or np.linalg.matrix_rank(a) < a.shape[0]:
            raise RankDeficient("linear image requires a full row rank matrix")
        object.__setattr__(self, "matrix", a)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @cached_property
    def impl(self):
        a, base = self.matrix, self.base
        core = base.impl
        if core.is_gaussian and isinstance(core, GaussianND):
            return GaussianND(a @ core.mean, a @ core.cov @ a.T)
        if isinstance(core, ProductND) and core.is_gaussian:
            mean, cov = core.mean_cov()
            return GaussianND(a @ mean, a @ cov @ a.T)
        if isinstance(core, MixtureND) and not isinstance(core, _InternalMixture):
            return MixtureND(core.weights, [LinearImage(a, c) for c in core.components]).impl
        r, m = a.shape
        if r == m:
            return _Affine(a, core)
        if isinstance(core, ProductND):
            if r == 1:
                return IndependentSum(a[0], core.marginals).impl
            live = a != 0
            if np.all(live.sum(axis=0) <= 1):
                # rows act on disjoint coordinates: the image is a product of 1-D sums
                return ProductND([linear_combination(row[mask], [core.marginals[j] for j in np.flatnonzero(mask)])
                                  for row, mask in zip(a, live)])
            margs = [mg.impl for mg in core.marginals]
            expanded = _expand_gaussian_mixtures(a, margs)
            if expanded is not None:
                return expanded
            if r == m - 1:
                return _Fiber(a, margs)
        raise UnsupportedDimension(f"linear image {r}x{m} of {type(base).__name__}")

    def mean_cov(self):
        m, c = self.base.mean_cov()
        return self.matrix @ m, self.matrix @ c @ self.matrix.T

    def scaled(self, c):
        return LinearImage(c * self.matrix, self.base)

    def shifted(self, b):
        b = np.broadcast_to(np.asarray(b, dtype=float), (self.dim,))
        a = self.matrix
        return LinearImage(a, self.base.shifted(a.T @ np.linalg.solve(a @ a.T, b)))


@dataclass(frozen=True, eq=False)
class IndependentSum(_Delegating):
    """Law of sum_i coeffs[i] * X_i for independent one-dimensional X_i."""

    coeffs: np.ndarray
    components: tuple

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).ravel()
        comps = tuple(self.components)
        if c.size != len(comps) or not comps:
            raise DimensionMismatch("coeffs and components must have equal nonzero length")
        if any(d.dim != 1 for d in comps):
            raise UnsupportedConvolution("independent sums are one-dimensional; use products for vectors")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "components", comps)

    dim = 1

    @cached_property
    def plan(self):
        """(non-Gaussian scaled parts, Gaussian mean, Gaussian variance)."""
        parts, gm, gv = [], 0.0, 0.0
        for c, d in zip(self.coeffs, self.components):
            if c == 0:
                continue
            if isinstance(d, GaussianSmoothed):
                # pool the smoothing noise with the other Gaussian parts
                d = IndependentSum([1.0, 1.0], [d.base, GaussianND([0.0], d.t * d.noise_cov)])
            if isinstance(d, IndependentSum):
                sub, m, v = d.scaled(c).plan
                parts.extend(sub)
                gm += m
                gv += v
                continue
            s = d.scaled(c)
            core = s.impl
            if isinstance(core, GaussianND):
                gm += float(core.mean[0])
                gv += float(core.cov[0, 0])
            else:
                parts.append(s)
        # jumpy factors first; mixtures last, where Gaussian smoothing stays in closed form
        parts.sort(key=lambda p: (not p.has_jumps, isinstance(p.impl, MixtureND)))
        return parts, gm, gv

    @cached_property
    def impl(self):
        parts, gm, gv = self.plan
        if not parts:
            return GaussianND([gm], [[gv]]) if gv > 0 else _degenerate()
        parts = list(parts)
        if gm:
            parts[-1] = parts[-1].shifted(gm)
        unif = [i for i, p in enumerate(parts) if isinstance(p.impl, Uniform1D)]
        if gv > 0 and len(unif) >= 2:
            # two uniforms and the Gaussian part have a closed-form density
            first, second = parts[unif[0]].impl, parts[unif[1]].impl
            parts = [p for i, p in enumerate(parts) if i not in unif[:2]]
            pair = _SmoothedUniformPair((first.lower, first.upper), (second.lower, second.upper), gv)
            parts.append(pair)
            gv = 0.0
        if gv > 0 and sum(isinstance(p.impl, Laplace1D) for p in parts) >= 2:
            # let another factor take the smoothing in closed form so the Laplace factors can pair
            for i, p in enumerate(parts[:-1]):
                if not isinstance(p.impl, Laplace1D) and p.impl.smoothed(np.array([[gv]])) is not None:
                    parts.append(parts.pop(i))
                    break
        last = parts[-1].impl
        if gv > 0:
            sm = last.smoothed(np.array([[gv]]))
            last = sm if sm is not None else _Conv(last, GaussianND([0.0], [[gv]]))
        rest = [p.impl for p in parts[:-1]]
        last = _absorb_into_gaussian_mixture(last, rest)
        # two Laplace factors collapse to one closed-form density, saving a quadrature level
        laps = [i for i, r in enumerate(rest) if isinstance(r, Laplace1D)]
        if isinstance(last, Laplace1D) and laps:
            other = rest.pop(laps[0])
            last = _LaplacePair(last.loc + other.loc, last.scale, other.scale)
        elif len(laps) >= 2:
            first, second = rest[laps[0]], rest[laps[1]]
            rest[laps[0]] = _LaplacePair(first.loc + second.loc, first.scale, second.scale)
            del rest[laps[1]]
        acc = last
        for r in reversed(rest):
            acc = _Conv(r, acc)
        return acc

    def mean_cov(self):
        stats = [d.mean_cov() for d in self.components]
        m = sum(c * s[0] for c, s in zip(self.coeffs, stats))
        v = sum(c * c * s[1] for c, s in zip(self.coeffs, stats))
        return m, v

    def draw(self, rng, count):
        return sum(c * d.draw(rng, count) for c, d in zip(self.coeffs, self.components))

    def scaled(self, c):
        return IndependentSum(c * self.coeffs, self.components)

    def shifted(self, b):
        comps = list(self.components)
        i = int(np.flatnonzero(self.coeffs)[0])
        comps[i] = comps[i].shifted(float(np.ravel(b)[0]) / self.coeffs[i])
        return IndependentSum(self.coeffs, comps)


def _absorb_into_gaussian_mixture(last, rest):
    """R + sum_i w_i N(m_i, v_i) = sum_i w_i (R + m_i smoothed by v_i).

    When ``last`` is a Gaussian mixture and some factor in ``rest`` has a
    closed-form smoothing, that factor moves inside the mixture and one
    convolution level disappears.  Smooth factors are preferred so that a
    factor with jumps stays outside as the integration variable.
    """
    if not isinstance(last, MixtureND) or not all(isinstance(c.impl, GaussianND) for _, c in last._live()):
        return last
    order = sorted(range(len(rest)), key=lambda i: rest[i].has_jumps)
    for i in order:
        r = rest[i]
        if not hasattr(r, "shifted"):
            continue
        comps = []
        for _, c in last._live():
            g = c.impl
            sm = r.shifted(float(g.mean[0])).smoothed(g.cov)
            if sm is None:
                break
            comps.append(sm)
        else:
            rest.pop(i)
            return _InternalMixture([w for w, _ in last._live()], comps)
    return last


def _degenerate():
    raise DomainError("the combination has no density (all coefficients vanish)")


# ----------------------------------------------------------------------
# public operations


def pdf_at(dist: Distribution, x) -> NumericResult:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dist.dim,):
        raise DimensionMismatch(f"point of shape {x.shape} for a {dist.dim}-dimensional law")
    val, err = dist.density(x[None, :])
    v = float(val[0])
    if not np.isfinite(v):
        raise NumericalFailure("density evaluation produced a non-finite value")
    if err:
        return NumericResult(v, err, "quadrature")
    return NumericResult(v, 0.0, "closed-form")


def score_at(dist: Distribution, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dist.dim,):
        raise DimensionMismatch(f"point of shape {x.shape} for a {dist.dim}-dimensional law")
    if dist.has_jumps:
        raise NonSmoothDensity(f"{type(dist).__name__} has a discontinuous density")
    if float(dist.pdf(x[None, :])[0]) <= 0.0:
        raise DomainError("score is undefined where the density vanishes")
    return np.asarray(dist.score(x[None, :]))[0]


def sample(dist: Distribution, count: int, seed: int) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be positive")
    return dist.draw(make_rng(seed), int(count))


def moments(dist: Distribution):
    return dist.mean_cov()


def convolve_gaussian(dist: Distribution, t: float, noise_cov) -> Distribution:
    k = _sym_matrix(noise_cov, "noise_cov", pd=False)
    if k.shape[0] != dist.dim:
        raise DimensionMismatch("noise_cov does not match the distribution dimension")
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t == 0:
        return dist
    if isinstance(dist, GaussianND):
        return GaussianND(dist.mean, dist.cov + t * k)
    if isinstance(dist, GaussianSmoothed) and np.allclose(dist.noise_cov, k, rtol=0, atol=1e-15):
        return GaussianSmoothed(dist.base, dist.t + t, k)
    return GaussianSmoothed(dist, t, k)


def linear_combination(coeffs: Sequence[float], dists: Sequence[Distribution]) -> Distribution:
    """Law of sum_i coeffs[i] * dists[i] for independent summands."""
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    if coeffs.size != len(dists):
        raise DimensionMismatch("one coefficient per distribution is required")
    dims = {d.dim for d in dists}
    if len(dims) != 1:
        raise DimensionMismatch("summands differ in dimension")
    n = dims.pop()
    live = [(c, d) for c, d in zip(coeffs, dists) if c != 0]
    if not live:
        raise DomainError("all coefficients vanish")
    if len(live) == 1:
        c, d = live[0]
        return d if c == 1 else d.scaled(c)
    gauss = [(c, d) for c, d in live if isinstance(d.impl, GaussianND)]
    if len(gauss) == len(live):
        mean = sum(c * d.impl.mean for c, d in gauss)
        cov = sum(c * c * d.impl.cov for c, d in gauss)
        return GaussianND(mean, cov)
    if n == 1:
        return IndependentSum([c for c, _ in live], [d for _, d in live])
    others = [(c, d) for c, d in live if not isinstance(d.impl, GaussianND)]
    if len(others) == 1:
        c, d = others[0]
        mean = sum((c2 * d2.impl.mean for c2, d2 in gauss), np.zeros(n))
        cov = sum(c2 * c2 * d2.impl.cov for c2, d2 in gauss)
        return GaussianSmoothed(d.scaled(c).shifted(mean), 1.0, cov)
    if all(isinstance(d, ProductND) for _, d in others):
        gm = sum((c * d.impl.mean for c, d in gauss), np.zeros(n))
        gc = sum((c * c * d.impl.cov for c, d in gauss), np.zeros((n, n)))
        if np.count_nonzero(gc - np.diag(np.diag(gc))):
            raise UnsupportedConvolution("correlated Gaussian part across product coordinates")
        margs = []
        for j in range(n):
            cs = [c for c, _ in others]
            ds = [d.marginals[j] for _, d in others]
            if gc[j, j] > 0:
                cs.append(1.0)
                ds.append(GaussianND([gm[j]], [[gc[j, j]]]))
            margs.append(IndependentSum(cs, ds))
        return ProductND(margs)
    raise UnsupportedConvolution("more than one non-Gaussian vector summand")


def truncation_box(dist: Distribution, k: float = TRUNCATION_SIGMAS):
    """Integration box: mean +- k standard deviations, widened to the
    family's tail-aware box when that is larger."""
    lo, hi = dist.box()
    try:
        mean, cov = dist.mean_cov()
    except HeavyTail:
        return lo, hi
    sd = np.sqrt(np.diag(cov))
    if dist.has_jumps and isinstance(dist.impl, Uniform1D):
        return lo, hi
    return np.minimum(lo, mean - k * sd), np.maximum(hi, mean + k * sd)


def integrate_density(dist: Distribution, f=None, *, abs_tol=1e-11, rel_tol=1e-10) -> NumericResult:
    """Integral of f(x) * p(x) over the truncation box (f defaults to 1)."""
    lo, hi = truncation_box(dist)
    if dist.dim == 1:
        def g(x):
            pts = x[:, None]
            p = dist.pdf(pts)
            return p if f is None else np.asarray(f(pts)) * p
        return integrate(g, lo[0], hi[0], dist.breaks()[0], abs_tol=abs_tol, rel_tol=rel_tol)

    def g(x):
        p = dist.pdf(x)
        return p if f is None else np.asarray(f(x)) * p
    return integrate_box(g, lo, hi, dist.breaks(), abs_tol=abs_tol, rel_tol=rel_tol)


__all__ = [
    "Distribution", "GaussianND", "Laplace1D", "Uniform1D", "Cauchy1D", "MixtureND", "ProductND",
    "LinearImage", "GaussianSmoothed", "IndependentSum", "pdf_at", "score_at", "sample", "moments",
    "convolve_gaussian", "linear_combination", "truncation_box", "integrate_density",
]
