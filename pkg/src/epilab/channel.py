"""Conditional-mean estimation and mutual information in additive Gaussian noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    Distribution,
    GaussianND,
    GaussianSmoothed,
    MixtureND,
    ProductND,
    _points,
    _sym_matrix,
    convolve_gaussian,
    linear_combination,
    truncation_box,
)
from .errors import DimensionMismatch, DomainError, NumericalFailure, UnsupportedDimension
from .functionals import entropy, fisher_info
from .numerics import NumericResult, combine_method, integrate, make_rng, segmented_quadrature

NOISE_SCALED = "noise-scaled"
SIGNAL_SCALED = "signal-scaled"
ORIENTATIONS = (NOISE_SCALED, SIGNAL_SCALED)
RB_SAMPLES = 40_000


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Y = X + sqrt(t) Z (noise-scaled) or Y = sqrt(t) X + Z (signal-scaled)."""

    signal: Distribution
    noise: GaussianND
    orientation: str = NOISE_SCALED
    t: float = 1.0

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")
        if not isinstance(self.noise.impl, GaussianND):
            raise DomainError("channel noise must be Gaussian")
        if self.noise.dim != self.signal.dim:
            raise DimensionMismatch("signal and noise dimensions differ")
        if not self.t >= 0:
            raise DomainError("t must be nonnegative")
        object.__setattr__(self, "t", float(self.t))

    @property
    def dim(self):
        return self.signal.dim

    def equivalent_noise_cov(self):
        """Covariance V such that the output is an affine image of X + N(0, V)."""
        k = self.noise.impl.cov
        if self.orientation == NOISE_SCALED:
            return self.t * k
        if self.t == 0:
            return None
        return k / self.t

    def to_signal_scale(self, y):
        """Map an observation y to the equivalent X + N(0, V) observation."""
        y = _points(y, self.dim)
        mu = self.noise.impl.mean
        if self.orientation == NOISE_SCALED:
            return y - math.sqrt(self.t) * mu
        if self.t == 0:
            raise DomainError("a t = 0 signal-scaled output carries no information on X")
        return (y - mu) / math.sqrt(self.t)

    def output(self) -> Distribution:
        z = self.noise
        if self.orientation == NOISE_SCALED:
            return linear_combination([1.0, math.sqrt(self.t)], [self.signal, z])
        return linear_combination([math.sqrt(self.t), 1.0], [self.signal, z])


# ----------------------------------------------------------------------
# posterior moments


def _posterior_moments_1d(x: Distribution, v: float, y: np.ndarray):
    """M_k(y) = int ((u - y)/sqrt(v))^k p(u) phi_v(y - u) du for k = 0, 1, 2.

    Offsets are measured in noise standard deviations so the three moments
    share one scale and one relative accuracy.
    """
    s = math.sqrt(v)
    xlo, xhi = (float(b[0]) for b in truncation_box(x))
    lo = np.maximum(xlo, y - 12 * s)
    hi = np.maximum(np.minimum(xhi, y + 12 * s), lo)
    br = np.asarray(x.breaks()[0], dtype=float)
    pts = np.concatenate([np.broadcast_to(br, (y.size, br.size)),
                          (y[:, None] + np.array([-s, 0.0, s])[None, :])], axis=1)
    pts = np.clip(pts, lo[:, None], hi[:, None])
    edges = np.sort(np.concatenate([lo[:, None], pts, hi[:, None]], axis=1), axis=1)

    def f(u, rows):
        d = (u - y[rows, None]) / s
        w = x.pdf(u.reshape(-1, 1)).reshape(u.shape) * np.exp(-0.5 * d * d) / (s * math.sqrt(2 * math.pi))
        return np.stack([w, w * d, w * d * d])

    return segmented_quadrature(f, edges)


def _mixture_gaussian_parts(x: Distribution):
    core = x.impl
    if isinstance(core, GaussianND):
        return [1.0], [core]
    if isinstance(core, MixtureND) and all(isinstance(c.impl, GaussianND) for c in core.components):
        return list(core.weights), [c.impl for c in core.components]
    return None


def _gm_posterior(weights, comps, v, y):
    """Posterior mean and covariance of a Gaussian mixture observed in N(0, v)."""
    logs, means, covs = [], [], []
    for w, c in zip(weights, comps):
        if w == 0:
            continue
        marg = GaussianND(c.mean, c.cov + v)
        gain = c.cov @ np.linalg.inv(c.cov + v)
        logs.append(math.log(w) + marg.logpdf(y))
        means.append(c.mean + (y - c.mean) @ gain.T)
        covs.append(c.cov - gain @ c.cov)
    logs = np.stack(logs)
    r = np.exp(logs - logs.max(0))
    r /= r.sum(0)
    mbar = sum(ri[:, None] * m for ri, m in zip(r, means))
    spread = [m - mbar for m in means]
    cov = sum(ri[:, None, None] * (cv[None] + d[:, :, None] * d[:, None, :])
              for ri, d, cv in zip(r, spread, covs))
    return mbar, cov


def _mmse_gm_1d(weights, comps, v: float) -> NumericResult:
    # outer integral of p_Y(y) Var(X | y) with the closed-form mixture posterior
    vm = np.array([[v]])
    live = [(w, c) for w, c in zip(weights, comps) if w > 0]
    ws = np.array([w for w, _ in live])
    mus = np.array([float(c.mean[0]) for _, c in live])
    sds = np.sqrt(np.array([float(c.cov[0, 0]) for _, c in live]) + v)

    def integrand(y):
        _, post = _gm_posterior(ws, [c for _, c in live], vm, y[:, None])
        z = (y[None, :] - mus[:, None]) / sds[:, None]
        py = (ws[:, None] * np.exp(-0.5 * z * z) / (sds[:, None] * math.sqrt(2 * math.pi))).sum(0)
        return py * post[:, 0, 0]

    pts = np.unique((mus[:, None] + sds[:, None] * np.array([-4.0, 0.0, 4.0])).ravel())
    res = integrate(integrand, float(np.min(mus - 14 * sds)), float(np.max(mus + 14 * sds)), tuple(pts),
                    abs_tol=1e-11 * min(1.0, v), rel_tol=1e-10)
    return NumericResult(float(res.value), res.error_estimate, "quadrature")


def conditional_mean(channel: ChannelSpec, y) -> np.ndarray:
    """E(X | output = y), computed on the equivalent X + N(0, V) observation."""
    single = np.ndim(y) <= 1 and not (channel.dim == 1 and np.ndim(y) == 1 and np.size(y) > 1)
    ys = channel.to_signal_scale(y)
    v = channel.equivalent_noise_cov()
    if not np.any(v):
        out = ys
    else:
        parts = _mixture_gaussian_parts(channel.signal)
        if parts is not None:
            out, _ = _gm_posterior(*parts, v, ys)
        elif channel.dim == 1:
            (m0, m1, _), _ = _posterior_moments_1d(channel.signal, float(v[0, 0]), ys[:, 0])
            if np.any(m0 <= 1e-300):
                raise NumericalFailure("posterior normalizer underflows; y is far outside the support")
            out = (ys[:, 0] + math.sqrt(float(v[0, 0])) * m1 / m0)[:, None]
        elif isinstance(channel.signal.impl, ProductND) and not np.count_nonzero(v - np.diag(np.diag(v))):
            cols = []
            for j, m in enumerate(channel.signal.impl.marginals):
                sub = ChannelSpec(m, GaussianND([0.0], [[v[j, j]]]), NOISE_SCALED, 1.0)
                cols.append(conditional_mean(sub, ys[:, j:j + 1])[:, 0] if ys.shape[0] > 1
                            else np.atleast_1d(conditional_mean(sub, ys[0, j:j + 1])))
            out = np.column_stack(cols)
        else:
            raise UnsupportedDimension("conditional mean for this signal family in n > 1")
    return out[0] if single else out


def _mmse_1d(x: Distribution, v: float) -> NumericResult:
    s = math.sqrt(v)
    xlo, xhi = (float(b[0]) for b in truncation_box(x))
    br = np.asarray(x.breaks()[0], dtype=float)
    gaps = [0.0]

    def integrand(y):
        (m0, m1, m2), gap = _posterior_moments_1d(x, v, y)
        gaps[0] = max(gaps[0], gap)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(m0 > 1e-300, m2 - m1 * m1 / np.where(m0 > 1e-300, m0, 1.0), 0.0)
        return v * np.clip(out, 0.0, None)

    # the MMSE is of order v, so the absolute tolerance follows it
    # the posterior departs from its far-field form within a few noise widths of a break
    near = (br[:, None] + s * np.array([-12.0, -4.0, -1.0, 0.0, 1.0, 4.0, 12.0])[None, :]).ravel()
    near = near[(near > xlo - 12 * s) & (near < xhi + 12 * s)]
    res = integrate(integrand, xlo - 12 * s, xhi + 12 * s, tuple(np.unique(near)),
                    abs_tol=1e-11 * min(1.0, v), rel_tol=1e-10)
    width = xhi - xlo + 24 * s
    return NumericResult(float(res.value), res.error_estimate + v * gaps[0] * width, "quadrature")


def _mmse_scalar(x: Distribution, v: float) -> NumericResult:
    """Var(X | X + N(0, v)) for a one-dimensional law.

    For X = B + G with G ~ N(0, g) the noise splits as W = (v/(g+v)) S + R,
    S = G + W, with R independent of everything else; hence
    mmse = g v/(g+v) + (v/(g+v))^2 Var(B | B + S).
    """
    if isinstance(x, GaussianSmoothed):
        g = float(x.t * np.ravel(x.noise_cov)[0])
        if g > 0:
            inner = _mmse_scalar(x.base, g + v)
            a = v / (g + v)
            return NumericResult(g * a + a * a * inner.value, a * a * inner.error_estimate, inner.method)
    core = x.impl
    if isinstance(core, GaussianND):
        c = float(core.cov[0, 0])
        return NumericResult(c * v / (c + v), 0.0, "closed-form")
    parts = _mixture_gaussian_parts(x)
    return _mmse_gm_1d(*parts, v) if parts is not None else _mmse_1d(x, v)


def mmse_matrix(channel: ChannelSpec, *, seed: int = 0, samples: int = RB_SAMPLES) -> NumericResult:
    """Cov(X | Y) averaged over Y, as an n x n matrix."""
    n = channel.dim
    v = channel.equivalent_noise_cov()
    x = channel.signal
    if v is None:
        _, cov = x.mean_cov()
        return NumericResult(cov, 0.0, "closed-form")
    if not np.any(v):
        return NumericResult(np.zeros((n, n)), 0.0, "closed-form")
    core = x.impl
    if isinstance(core, GaussianND):
        c = core.cov
        return NumericResult(c - c @ np.linalg.solve(c + v, c), 0.0, "closed-form")
    if n == 1:
        r = _mmse_scalar(x, float(v[0, 0]))
        return NumericResult(np.array([[r.value]]), r.error_estimate, r.method)
    if isinstance(core, ProductND) and not np.count_nonzero(v - np.diag(np.diag(v))):
        parts = [_mmse_1d(m, float(v[j, j])) for j, m in enumerate(core.marginals)]
        return NumericResult(np.diag([p.value for p in parts]), sum(p.error_estimate for p in parts),
                             "quadrature")
    parts = _mixture_gaussian_parts(x)
    if parts is not None and n <= 3:
        # Rao-Blackwellized: average the closed-form posterior covariance over sampled outputs
        rng = make_rng(seed)
        xs = x.draw(rng, samples)
        chol = np.linalg.cholesky(v)
        ys = xs + rng.standard_normal((samples, n)) @ chol.T
        _, post = _gm_posterior(*parts, v, ys)
        est = post.mean(0)
        se = float(np.trace(post, axis1=1, axis2=2).std(ddof=1) / math.sqrt(samples))
        return NumericResult(est, se, "monte-carlo")
    raise UnsupportedDimension(f"MMSE for {type(x).__name__} in dimension {n}")


def mmse(channel: ChannelSpec, **kw) -> NumericResult:
    """Var(X | Y) = E|X - E(X|Y)|^2 (the trace of the MMSE matrix)."""
    m = mmse_matrix(channel, **kw)
    return NumericResult(float(np.trace(m.value)), m.error_estimate, m.method)


# ----------------------------------------------------------------------
# mutual information


def mutual_info_noise(channel: ChannelSpec) -> NumericResult:
    """I(X + sqrt(t) Z; Z) = h(X + sqrt(t) Z) - h(X)."""
    if channel.orientation != NOISE_SCALED:
        raise ValueError("mutual_info_noise needs a noise-scaled channel")
    if channel.t == 0:
        return NumericResult(0.0, 0.0, "closed-form")
    y = convolve_gaussian(channel.signal, channel.t, channel.noise.impl.cov)
    hy, hx = entropy(y), entropy(channel.signal)
    return NumericResult(hy.nats - hx.nats, hy.error_estimate + hx.error_estimate,
                         combine_method(hy.method, hx.method))


def mutual_info_additive(x: Distribution, z: Distribution, t: float) -> NumericResult:
    """I(X; sqrt(t) X + Z) = h(sqrt(t) X + Z) - h(Z) for any independent noise Z."""
    if t == 0:
        return NumericResult(0.0, 0.0, "closed-form")
    y = linear_combination([math.sqrt(t), 1.0], [x, z])
    hy, hz = entropy(y), entropy(z)
    return NumericResult(hy.nats - hz.nats, hy.error_estimate + hz.error_estimate,
                         combine_method(hy.method, hz.method))


def mutual_info_signal(channel: ChannelSpec) -> NumericResult:
    """I(X; sqrt(t) X + Z)."""
    if channel.orientation != SIGNAL_SCALED:
        raise ValueError("mutual_info_signal needs a signal-scaled channel")
    return mutual_info_additive(channel.signal, channel.noise, channel.t)


def complementary_residual(x: Distribution, noise_var: float) -> NumericResult:
    """s J(X + Z) + Var(X | X + Z) / s - n for white Z of variance s."""
    if not noise_var > 0:
        raise DomainError("noise variance must be positive")
    n = x.dim
    k = noise_var * np.eye(n)
    j = fisher_info(convolve_gaussian(x, 1.0, k))
    m = mmse(ChannelSpec(x, GaussianND(np.zeros(n), k), NOISE_SCALED, 1.0))
    val = noise_var * j.scalar + m.value / noise_var - n
    err = noise_var * j.error_estimate + m.error_estimate / noise_var
    return NumericResult(val, err, combine_method(j.method, m.method))


def complementary_matrix_residual(x: Distribution, noise_cov) -> NumericResult:
    """J(X + Z) Cov(Z) + Cov(Z)^-1 Cov(X | X + Z) - I for Gaussian Z (n <= 3)."""
    k = _sym_matrix(noise_cov, "noise_cov")
    n = x.dim
    if k.shape[0] != n:
        raise DimensionMismatch("noise covariance does not match the signal")
    if n > 3:
        raise UnsupportedDimension("matrix residual is limited to n <= 3")
    j = fisher_info(convolve_gaussian(x, 1.0, k))
    m = mmse_matrix(ChannelSpec(x, GaussianND(np.zeros(n), k), NOISE_SCALED, 1.0))
    res = j.matrix @ k + np.linalg.solve(k, m.value) - np.eye(n)
    err = j.error_estimate * float(np.abs(k).max()) + m.error_estimate * float(np.abs(np.linalg.inv(k)).max())
    return NumericResult(res, err, combine_method(j.method, m.method))
