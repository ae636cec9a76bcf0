"""Differential entropy, entropy power, Fisher information and divergences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributions import (
    Distribution,
    GaussianND,
    ProductND,
    _Affine,
    truncation_box,
)
from .errors import DomainError, NonSmoothDensity, NumericalFailure, SupportMismatch
from .numerics import NumericResult, combine_method, integrate, integrate_box, make_rng, monte_carlo_mean

_TINY = 1e-300
_LOG_2PIE = math.log(2 * math.pi * math.e)
MC_SAMPLES = 200_000


@dataclass(frozen=True)
class EntropyValue:
    nats: float
    error_estimate: float = 0.0
    method: str = "closed-form"

    def __post_init__(self):
        if math.isnan(self.nats) or self.nats == math.inf:
            raise NumericalFailure("entropy evaluated to NaN or +inf")
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be nonnegative")

    @property
    def value(self):
        return self.nats

    @property
    def is_singular(self):
        return self.nats == -math.inf

    @classmethod
    def singular(cls):
        """The minus-infinity sentinel used for laws without a density."""
        return cls(-math.inf, 0.0, "closed-form")

    def __float__(self):
        return self.nats


@dataclass(frozen=True)
class FisherValue:
    scalar: float
    matrix: np.ndarray | None = None
    error_estimate: float = 0.0
    method: str = "closed-form"
    note: str = ""

    def __post_init__(self):
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=float)
            object.__setattr__(self, "matrix", m)
            if abs(float(np.trace(m)) - self.scalar) > 1e-8 * max(1.0, abs(self.scalar)):
                raise NumericalFailure("scalar Fisher information differs from the matrix trace")

    @property
    def value(self):
        return self.scalar

    def __float__(self):
        return self.scalar


# ----------------------------------------------------------------------
# entropy


def _neg_plogp(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > _TINY, -p * np.log(np.where(p > _TINY, p, 1.0)), 0.0)


def entropy(dist: Distribution, *, method: str = "auto", samples: int = MC_SAMPLES,
            seed: int = 0, rel_tol: float | None = None, abs_tol: float | None = None) -> EntropyValue:
    """Differential entropy in nats.

    Quadrature is used up to three dimensions and Monte Carlo beyond;
    ``rel_tol``/``abs_tol`` loosen or tighten the quadrature target.
    """
    if method == "monte-carlo":
        return _entropy_mc(dist, samples, seed)
    closed = dist.entropy_closed() if method == "auto" else None
    if closed is not None:
        return EntropyValue(float(closed), 0.0, "closed-form")
    core = dist.impl
    if isinstance(core, ProductND) and core.dim > 1:
        parts = [entropy(m, method=method, samples=samples, seed=seed, rel_tol=rel_tol, abs_tol=abs_tol)
                 for m in core.marginals]
        return EntropyValue(sum(p.nats for p in parts), sum(p.error_estimate for p in parts),
                            combine_method(*[p.method for p in parts]))
    if isinstance(core, _Affine):
        inner = entropy(core.base, method=method, samples=samples, seed=seed, rel_tol=rel_tol, abs_tol=abs_tol)
        if inner.is_singular:
            return inner
        return EntropyValue(inner.nats + core.logdet, inner.error_estimate, inner.method)
    n = dist.dim
    if n > 3:
        return _entropy_mc(dist, samples, seed)
    lo, hi = truncation_box(dist)
    dens_err = [0.0]

    def integrand(x):
        pts = x[:, None] if n == 1 else x
        p, e = dist.density(pts)
        dens_err[0] = max(dens_err[0], e)
        return _neg_plogp(p)

    if n == 1:
        res = integrate(integrand, lo[0], hi[0], dist.breaks()[0],
                        abs_tol=abs_tol or 1e-11, rel_tol=rel_tol or 1e-10)
    else:
        res = integrate_box(integrand, lo, hi, dist.breaks(),
                            abs_tol=abs_tol or 1e-8, rel_tol=rel_tol or 1e-8)
    # a density error e moves -p log p by about e * |1 + log p|; |log p| <= 50 where it matters
    propagated = dens_err[0] * 50.0 * float(np.prod(hi - lo))
    return EntropyValue(float(res.value), res.error_estimate + propagated, "quadrature")


def _entropy_mc(dist, samples, seed):
    x = dist.draw(make_rng(seed), samples)
    res = monte_carlo_mean(-dist.logpdf(x))
    return EntropyValue(res.value, res.error_estimate, "monte-carlo")


def entropy_power(dist: Distribution, h: EntropyValue | None = None) -> NumericResult:
    h = h or entropy(dist)
    n = dist.dim
    if h.is_singular:
        return NumericResult(0.0, 0.0, h.method)
    val = math.exp(2 * h.nats / n - _LOG_2PIE)
    err = val * (math.exp(2 * h.error_estimate / n) - 1.0)
    return NumericResult(val, err, h.method)


def entropy_from_power(power: float, n: int = 1) -> float:
    """Entropy of a white Gaussian with the given entropy power."""
    return 0.5 * n * (math.log(power) + _LOG_2PIE)


def gaussian_entropy(cov) -> float:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise DomainError("covariance is not positive definite")
    return 0.5 * (cov.shape[0] * _LOG_2PIE + logdet)


# ----------------------------------------------------------------------
# Fisher information


def fisher_info(dist: Distribution, *, abs_tol: float | None = None,
                rel_tol: float | None = None) -> FisherValue:
    """Fisher information (matrix and trace) of a law with a smooth density.

    Tolerances default to 1e-11/1e-10 on the line and 1e-8 in two or three dimensions.
    """
    if dist.has_jumps:
        raise NonSmoothDensity(f"{type(dist).__name__} has a discontinuous density; J is infinite")
    closed = dist.fisher_closed()
    if closed is not None:
        m = np.asarray(closed, dtype=float)
        return FisherValue(float(np.trace(m)), m, 0.0, "closed-form", "closed-form score")
    core = dist.impl
    note = "closed-form score" if dist.score_is_exact else "finite-difference score"
    n = dist.dim
    if isinstance(core, ProductND) and n > 1:
        parts = [fisher_info(m, abs_tol=abs_tol, rel_tol=rel_tol) for m in core.marginals]
        m = np.diag([p.scalar for p in parts])
        return FisherValue(float(np.trace(m)), m, sum(p.error_estimate for p in parts),
                           combine_method(*[p.method for p in parts]), note)
    if isinstance(core, _Affine):
        inner = fisher_info(core.base, abs_tol=abs_tol, rel_tol=rel_tol)
        m = core.Ainv.T @ inner.matrix @ core.Ainv
        scale = float(np.linalg.norm(core.Ainv, 2)) ** 2
        return FisherValue(float(np.trace(m)), m, inner.error_estimate * scale, inner.method, inner.note)
    lo, hi = truncation_box(dist)
    iu = np.triu_indices(n)

    def integrand(x):
        pts = x[:, None] if n == 1 else x
        p, g = dist.pdf_and_grad(pts)
        safe = np.where(p > _TINY, p, 1.0)
        outer = g[:, iu[0]] * g[:, iu[1]] / safe[:, None]
        return np.where((p > _TINY)[:, None], outer, 0.0).T

    if n == 1:
        res = integrate(integrand, lo[0], hi[0], dist.breaks()[0],
                        abs_tol=abs_tol or 1e-11, rel_tol=rel_tol or 1e-10)
    elif n <= 3:
        res = integrate_box(integrand, lo, hi, dist.breaks(), abs_tol=abs_tol or 1e-8, rel_tol=rel_tol or 1e-8)
    else:
        raise NumericalFailure("Fisher information by quadrature is limited to n <= 3")
    vals = np.atleast_1d(res.value)
    m = np.zeros((n, n))
    m[iu] = vals
    m = m + np.triu(m, 1).T
    return FisherValue(float(np.trace(m)), m, res.error_estimate * n, "quadrature", note)


def gaussian_fisher(cov) -> float:
    return float(np.trace(np.linalg.inv(np.atleast_2d(cov))))


# ----------------------------------------------------------------------
# divergences


def _gaussian_kl(p: GaussianND, q: GaussianND) -> float:
    qi = np.linalg.inv(q.cov)
    d = q.mean - p.mean
    n = p.dim
    _, ldq = np.linalg.slogdet(q.cov)
    _, ldp = np.linalg.slogdet(p.cov)
    return 0.5 * (float(np.trace(qi @ p.cov)) + float(d @ qi @ d) - n + ldq - ldp)


def divergence(p: Distribution, q: Distribution) -> NumericResult:
    """Kullback-Leibler divergence D(p || q) in nats."""
    if p.dim != q.dim:
        from .errors import DimensionMismatch
        raise DimensionMismatch("divergence between laws of different dimension")
    if isinstance(p.impl, GaussianND) and isinstance(q.impl, GaussianND):
        return NumericResult(_gaussian_kl(p.impl, q.impl), 0.0, "closed-form")
    n = p.dim
    lo, hi = truncation_box(p)

    def integrand(x):
        pts = x[:, None] if n == 1 else x
        lp = p.logpdf(pts)
        lq = q.logpdf(pts)
        live = lp > math.log(_TINY)
        if np.any(live & ~np.isfinite(lq)):
            raise SupportMismatch("p has mass where the density of q vanishes")
        with np.errstate(invalid="ignore"):
            return np.where(live, np.exp(np.where(live, lp, 0.0)) * (lp - lq), 0.0)

    points = [tuple(sorted(set(a) | set(b))) for a, b in zip(p.breaks(), q.breaks())]
    if n == 1:
        res = integrate(integrand, lo[0], hi[0], points[0], abs_tol=1e-13, rel_tol=1e-11)
    else:
        res = integrate_box(integrand, lo, hi, points, abs_tol=1e-9, rel_tol=1e-9)
    return NumericResult(float(res.value), res.error_estimate, "quadrature")


def moment_matched_gaussian(dist: Distribution) -> GaussianND:
    mean, cov = dist.mean_cov()
    return GaussianND(mean, cov)


def non_gaussianness_h(dist: Distribution) -> NumericResult:
    """D(X || X*) = h(X*) - h(X) for the moment-matched Gaussian X*."""
    h = entropy(dist)
    _, cov = dist.mean_cov()
    return NumericResult(gaussian_entropy(cov) - h.nats, h.error_estimate, h.method)


def non_gaussianness_j(dist: Distribution) -> NumericResult:
    """J(X) - J(X*) = J(X) - tr(Cov(X)^-1)."""
    j = fisher_info(dist)
    _, cov = dist.mean_cov()
    return NumericResult(j.scalar - gaussian_fisher(cov), j.error_estimate, j.method)


def translation_family(dist: Distribution) -> Callable[[np.ndarray], Distribution]:
    """theta -> law with density p(x + theta)."""
    def family(theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return dist.shifted(-theta if dist.dim > 1 else -float(theta[0]))
    return family


def kullback_expansion_check(
    family: Callable[[np.ndarray], Distribution],
    theta0,
    *,
    deltas: Sequence[float] = (1e-1, 1e-2, 1e-3),
    direction=None,
) -> NumericResult:
    """Ratios |D(p_theta0 || p_theta') - 0.5 d^T J d| / |d|^2 along shrinking d.

    The value is the array of ratios in the order of ``deltas``; the local
    second-order expansion holds when they tend to zero.
    """
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    base = family(theta0)
    e = np.zeros(theta0.size) if direction is None else np.asarray(direction, dtype=float)
    if direction is None:
        e[0] = 1.0
    e = e / np.linalg.norm(e)
    j = fisher_info(base)
    ratios, err = [], 0.0
    for d in deltas:
        step = d * e
        div = divergence(base, family(theta0 + step))
        quad = 0.5 * float(step @ j.matrix @ step)
        ratios.append(abs(div.value - quad) / d**2)
        err = max(err, (div.error_estimate + 0.5 * j.error_estimate * d * d) / d**2)
    method = combine_method(j.method, "quadrature")
    if all(r == 0 for r in ratios) and j.method == "closed-form":
        method = "quadrature"
    return NumericResult(np.array(ratios), err, method)
