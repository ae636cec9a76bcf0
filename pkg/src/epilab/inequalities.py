"""Slack-reporting checks of the entropy, Fisher-information and mutual-information inequalities."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import NOISE_SCALED, ChannelSpec, mmse
from .distributions import (
    Distribution,
    GaussianND,
    LinearImage,
    ProductND,
    _sym_matrix,
    convolve_gaussian,
    linear_combination,
)
from .errors import DimensionMismatch, DomainError, UnsupportedDimension
from .functionals import (
    EntropyValue,
    entropy,
    entropy_from_power,
    entropy_power,
    fisher_info,
    gaussian_entropy,
)
from .numerics import combine_method, make_rng, monte_carlo_mean
from .serialize import digest

VERDICTS = ("holds", "violated", "equality")
BASE_TOLERANCE = 1e-5
COEFF_CUTOFF = 1e-8
SATO_MC_SAMPLES = 200_000
SATO_QUAD_TOL = 1e-6
EPI_FORMS = ("power", "gaussian-comparison", "concavity")
FII_FORMS = ("reciprocal", "gaussian-comparison", "convexity")


def tol_scale() -> float:
    """Global tolerance multiplier from EPILAB_TOL_SCALE (default 1)."""
    raw = os.environ.get("EPILAB_TOL_SCALE", "").strip()
    if not raw:
        return 1.0
    value = float(raw)
    if not value > 0:
        raise ValueError("EPILAB_TOL_SCALE must be positive")
    return value


def tolerance_for(error_estimate: float, widen: float = 1.0, floor: float = BASE_TOLERANCE) -> float:
    """max(floor, 10 x combined error estimate), widened and scaled."""
    return max(floor, 10.0 * error_estimate) * widen * tol_scale()


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    tolerance: float
    verdict: str
    inputs_digest: str
    error_estimate: float
    reference: str = ""
    method: str = "closed-form"
    equality_expected: bool | None = None
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")

    @property
    def holds(self):
        return self.verdict != "violated"


def make_report(name: str, lhs: float, rhs: float, direction: str, error_estimate: float,
                inputs, *, reference: str = "", method: str = "closed-form",
                equality_expected: bool | None = None, widen: float = 1.0,
                floor: float = BASE_TOLERANCE, details: dict | None = None) -> InequalityReport:
    """Build a report for ``lhs >= rhs`` (direction "ge"), ``lhs <= rhs`` ("le")
    or the identity ``lhs == rhs`` ("eq", slack -|lhs - rhs|)."""
    if direction == "ge":
        slack = lhs - rhs
    elif direction == "le":
        slack = rhs - lhs
    elif direction == "eq":
        slack = -abs(lhs - rhs)
    else:
        raise ValueError("direction must be 'ge', 'le' or 'eq'")
    tol = tolerance_for(error_estimate, widen, floor)
    if slack < -tol:
        verdict = "violated"
    elif abs(slack) <= tol:
        verdict = "equality"
    else:
        verdict = "holds"
    return InequalityReport(name, float(lhs), float(rhs), float(slack), tol, verdict,
                            digest(name, inputs), float(error_estimate), reference, method,
                            equality_expected, dict(details or {}))


# ----------------------------------------------------------------------
# families


@dataclass(frozen=True, eq=False)
class WeightedFamily:
    """Independent laws X_i with coefficients a_i normalized to unit sum of squares."""

    dists: tuple
    coeffs: np.ndarray

    def __post_init__(self):
        dists = tuple(self.dists)
        a = np.asarray(self.coeffs, dtype=float).ravel()
        if len(dists) == 0 or a.size != len(dists):
            raise DimensionMismatch("one coefficient per distribution is required")
        if len({d.dim for d in dists}) != 1:
            raise DimensionMismatch("family members differ in dimension")
        # a weight a_i^2 below 1e-16 of the largest is beyond double resolution; drop it
        a = np.where(np.abs(a) <= COEFF_CUTOFF * np.max(np.abs(a), initial=0.0), 0.0, a)
        norm = math.sqrt(float(a @ a))
        if norm == 0:
            raise DomainError("all coefficients vanish")
        object.__setattr__(self, "dists", dists)
        object.__setattr__(self, "coeffs", a / norm)

    @property
    def dim(self):
        return self.dists[0].dim

    @property
    def weights(self):
        return self.coeffs**2

    def active(self):
        return [(a, d) for a, d in zip(self.coeffs, self.dists) if a != 0]

    def mixture_sum(self) -> Distribution:
        act = self.active()
        return linear_combination([a for a, _ in act], [d for _, d in act])

    def with_noise(self, noise_cov) -> "WeightedFamily":
        return WeightedFamily(tuple(convolve_gaussian(d, 1.0, noise_cov) for d in self.dists), self.coeffs)

    def as_inputs(self):
        return {"dists": list(self.dists), "coeffs": self.coeffs}


def _gaussian_covs(dists):
    covs = []
    for d in dists:
        if not isinstance(d.impl, GaussianND):
            return None
        covs.append(d.impl.cov)
    return covs


def gaussian_equality_case(dists: Sequence[Distribution], mode: str = "identical") -> bool:
    """All laws Gaussian with identical (or proportional) covariances; one law always qualifies."""
    dists = list(dists)
    if len(dists) <= 1:
        return True
    covs = _gaussian_covs(dists)
    if covs is None:
        return False
    ref = covs[0]
    for c in covs[1:]:
        if mode == "identical":
            if not np.allclose(c, ref, rtol=1e-9, atol=1e-12):
                return False
        else:
            ratio = float(np.trace(c) / np.trace(ref))
            if not np.allclose(c, ratio * ref, rtol=1e-9, atol=1e-12):
                return False
    return True


def _entropy(d, **kw):
    h = entropy(d, **kw)
    if h.is_singular:
        raise DomainError("a law without density has entropy -inf; the inequality is degenerate")
    return h


# ----------------------------------------------------------------------
# EPI and FII


def check_epi(fam: WeightedFamily, form: str = "concavity") -> InequalityReport:
    """Entropy power inequality in its power, Gaussian-comparison or concavity form."""
    if form not in EPI_FORMS:
        raise ValueError(f"form must be one of {EPI_FORMS}")
    n = fam.dim
    act = fam.active()
    hs = [_entropy(d) for _, d in act]
    hsum = _entropy(fam.mixture_sum())
    err = hsum.error_estimate + sum(a * a * h.error_estimate for (a, _), h in zip(act, hs))
    method = combine_method(hsum.method, *[h.method for h in hs])
    members = [d for _, d in act]
    if form == "concavity":
        lhs, rhs = hsum.nats, sum(a * a * h.nats for (a, _), h in zip(act, hs))
        expected = gaussian_equality_case(members, "identical")
        ref = "entropy power inequality, concavity form"
    else:
        powers = [entropy_power(d, h) for (_, d), h in zip(act, hs)]
        weighted = sum(a * a * p.value for (a, _), p in zip(act, powers))
        expected = gaussian_equality_case(members, "proportional")
        if form == "power":
            ps = entropy_power(fam.mixture_sum(), hsum)
            lhs, rhs = ps.value, weighted
            err = ps.error_estimate + sum(a * a * p.error_estimate for (a, _), p in zip(act, powers))
            ref = "entropy power inequality, power form"
        else:
            # white Gaussians with matched entropies; their weighted sum is white with power `weighted`
            lhs, rhs = hsum.nats, entropy_from_power(weighted, n)
            ref = "entropy power inequality, Gaussian-comparison form"
    return make_report(f"epi-{form}", lhs, rhs, "ge", err, {**fam.as_inputs(), "form": form},
                       reference=ref, method=method, equality_expected=expected)


def check_fii(fam: WeightedFamily, form: str = "convexity") -> InequalityReport:
    """Fisher information inequality in its reciprocal, Gaussian-comparison or convexity form."""
    if form not in FII_FORMS:
        raise ValueError(f"form must be one of {FII_FORMS}")
    act = fam.active()
    js = [fisher_info(d) for _, d in act]
    jsum = fisher_info(fam.mixture_sum())
    method = combine_method(jsum.method, *[j.method for j in js])
    members = [d for _, d in act]
    if form == "convexity":
        lhs, rhs = jsum.scalar, sum(a * a * j.scalar for (a, _), j in zip(act, js))
        err = jsum.error_estimate + sum(a * a * j.error_estimate for (a, _), j in zip(act, js))
        return make_report("fii-convexity", lhs, rhs, "le", err, {**fam.as_inputs(), "form": form},
                           reference="Fisher information inequality, convexity form", method=method,
                           equality_expected=gaussian_equality_case(members, "identical"))
    inv = sum(a * a / j.scalar for (a, _), j in zip(act, js))
    inv_err = sum(a * a * j.error_estimate / j.scalar**2 for (a, _), j in zip(act, js))
    expected = gaussian_equality_case(members, "proportional")
    if form == "reciprocal":
        lhs, rhs = 1.0 / jsum.scalar, inv
        err = jsum.error_estimate / jsum.scalar**2 + inv_err
        return make_report("fii-reciprocal", lhs, rhs, "ge", err, {**fam.as_inputs(), "form": form},
                           reference="Fisher information inequality, reciprocal form", method=method,
                           equality_expected=expected)
    # white Gaussians with matched Fisher information; their weighted sum has J = 1 / inv
    lhs, rhs = jsum.scalar, 1.0 / inv
    err = jsum.error_estimate + inv_err / inv**2
    return make_report("fii-gaussian-comparison", lhs, rhs, "le", err, {**fam.as_inputs(), "form": form},
                       reference="Fisher information inequality, Gaussian-comparison form", method=method,
                       equality_expected=expected)


def check_cramer_rao(dist: Distribution) -> InequalityReport:
    """J(X) >= tr(Cov(X)^-1), with equality exactly for Gaussians."""
    j = fisher_info(dist)
    _, cov = dist.mean_cov()
    rhs = float(np.trace(np.linalg.inv(cov)))
    return make_report("cramer-rao", j.scalar, rhs, "ge", j.error_estimate, {"dist": dist},
                       reference="Cramer-Rao lower bound on Fisher information", method=j.method,
                       equality_expected=isinstance(dist.impl, GaussianND))


# ----------------------------------------------------------------------
# mutual information


def _noise_mi(x: Distribution, noise_cov) -> tuple[float, float, str]:
    """I(X + Z; Z) = h(X + Z) - h(X) for Gaussian Z."""
    hy = _entropy(convolve_gaussian(x, 1.0, noise_cov))
    hx = _entropy(x)
    return hy.nats - hx.nats, hy.error_estimate + hx.error_estimate, combine_method(hy.method, hx.method)


def _noise_cov(z: Distribution, n: int):
    if not isinstance(z.impl, GaussianND):
        raise DomainError("the perturbation must be Gaussian")
    if z.dim != n:
        raise DimensionMismatch("perturbation dimension differs from the family")
    return z.impl.cov


def check_mii(fam: WeightedFamily, z: Distribution) -> InequalityReport:
    """I(sum a_i X_i + Z; Z) <= sum a_i^2 I(X_i + Z; Z)."""
    k = _noise_cov(z, fam.dim)
    lhs, err, m0 = _noise_mi(fam.mixture_sum(), k)
    rhs, methods = 0.0, [m0]
    for a, d in fam.active():
        v, e, m = _noise_mi(d, k)
        rhs += a * a * v
        err += a * a * e
        methods.append(m)
    return make_report("mii", lhs, rhs, "le", err, {**fam.as_inputs(), "noise": z},
                       reference="mutual information inequality", method=combine_method(*methods),
                       equality_expected=gaussian_equality_case([d for _, d in fam.active()], "identical"))


def mii_gap(fam: WeightedFamily, t: float) -> tuple[float, float]:
    """f(t) = I(sum a_i X_i + sqrt(t) Z; Z) - sum a_i^2 I(X_i + sqrt(t) Z; Z) and its error."""
    n = fam.dim
    r = check_mii(fam, GaussianND(np.zeros(n), t * np.eye(n)))
    return -r.slack, r.error_estimate


def epi_deficit(fam: WeightedFamily) -> tuple[float, float]:
    """h(sum a_i X_i) - sum a_i^2 h(X_i) and its error."""
    act = fam.active()
    hsum = _entropy(fam.mixture_sum())
    hs = [_entropy(d) for _, d in act]
    value = hsum.nats - sum(a * a * h.nats for (a, _), h in zip(act, hs))
    err = hsum.error_estimate + sum(a * a * h.error_estimate for (a, _), h in zip(act, hs))
    return value, err


def check_mii_rewritten(fam: WeightedFamily, z: Distribution) -> InequalityReport:
    """h(sum a X) - sum a^2 h(X) >= the same quantity for X_i + Z_i (independent copies of Z).

    Holds for Gaussian Z; with non-Gaussian Z the opposite can occur.
    """
    if z.dim != fam.dim:
        raise DimensionMismatch("perturbation dimension differs from the family")
    lhs, e1 = epi_deficit(fam)
    perturbed = WeightedFamily(tuple(linear_combination([1.0, 1.0], [d, z]) for d in fam.dists), fam.coeffs)
    act = perturbed.active()
    # sum a_i (X_i + Z_i) with independent copies Z_i
    combo = linear_combination([a for a, _ in fam.active()] * 2,
                               [d for _, d in fam.active()] + [z] * len(act))
    hsum = _entropy(combo)
    hs = [_entropy(d) for _, d in act]
    rhs = hsum.nats - sum(a * a * h.nats for (a, _), h in zip(act, hs))
    err = e1 + hsum.error_estimate + sum(a * a * h.error_estimate for (a, _), h in zip(act, hs))
    gaussian_z = isinstance(z.impl, GaussianND)
    return make_report("mii-rewritten", lhs, rhs, "ge", err, {**fam.as_inputs(), "noise": z},
                       reference="mutual information inequality rewritten with perturbed summands",
                       method=combine_method(hsum.method, *[h.method for h in hs]),
                       equality_expected=gaussian_equality_case([d for _, d in fam.active()], "identical")
                       and gaussian_z)


def _peel_gaussians(dists, z):
    """Split Gaussian summands off the joint law of (X_i + Z)_i for Gaussian Z.

    With X_g ~ N(m, v) and Z of variance s, Y_j - c Y_g (c = s / (v + s)) is
    independent of Y_g and equals X_j + W for one common W ~ N(0, v s / (v + s)),
    so h((Y_i)_i) = h(Y_g) + h((X_j + W)_j) by a unit-determinant shear.
    Returns the entropies split off, the remaining summands and their common noise.
    """
    rest, peeled = list(dists), []
    while len(rest) > 1 and isinstance(z.impl, GaussianND):
        g = next((i for i, d in enumerate(rest) if isinstance(d.impl, GaussianND)), None)
        if g is None:
            break
        gd = rest.pop(g).impl
        v, s = float(gd.cov[0, 0]), float(z.impl.cov[0, 0])
        peeled.append(EntropyValue(gaussian_entropy([[v + s]])))
        z = GaussianND([0.0], [[v * s / (v + s)]])
    return peeled, rest, z


def check_sato(dists: Sequence[Distribution], z: Distribution, *, seed: int = 0,
               samples: int = SATO_MC_SAMPLES) -> InequalityReport:
    """I((X_i + Z)_i; Z) <= sum_i I(X_i + Z; Z) for independent scalar X_i and Z.

    Gaussian summands are split off the joint exactly when Z is Gaussian.  Two
    remaining summands use quadrature of the joint density; three use Monte
    Carlo on the log-likelihood ratio with a ten-fold widened tolerance.
    """
    dists = list(dists)
    if any(d.dim != 1 for d in dists) or z.dim != 1:
        raise UnsupportedDimension("the joint check is implemented for scalar variables")
    k = len(dists)
    if k not in (2, 3):
        raise UnsupportedDimension("two or three summands are supported")
    zb = z
    rhs, err, methods = 0.0, 0.0, []
    for d in dists:
        hy = _entropy(linear_combination([1.0, 1.0], [d, zb]))
        hx = _entropy(d)
        rhs += hy.nats - hx.nats
        err += hy.error_estimate + hx.error_estimate
        methods += [hy.method, hx.method]
    hxs = [_entropy(d) for d in dists]
    err += sum(h.error_estimate for h in hxs)
    methods += [h.method for h in hxs]
    peeled, rest, zb = _peel_gaussians(dists, zb)
    hj_nats = sum(h.nats for h in peeled)
    err += sum(h.error_estimate for h in peeled)
    methods += [h.method for h in peeled]
    k = len(rest)
    a = np.hstack([np.eye(k), np.ones((k, 1))])
    joint = LinearImage(a, ProductND(rest + [zb]))
    widen = 1.0
    if k == 1 or isinstance(joint.impl, GaussianND):
        hj = _entropy(joint)
        hj_nats += hj.nats
        err += hj.error_estimate
        methods.append(hj.method)
    elif k == 2:
        hj = entropy(joint, abs_tol=SATO_QUAD_TOL, rel_tol=SATO_QUAD_TOL)
        hj_nats += hj.nats
        err += hj.error_estimate
        methods.append(hj.method)
    else:
        rng = make_rng(seed)
        xs = np.hstack([d.draw(rng, samples) for d in rest])
        y = xs + zb.draw(rng, samples)
        ratios = np.empty(samples)
        chunk = 20_000
        for s in range(0, samples, chunk):
            sl = slice(s, s + chunk)
            cond = sum(d.logpdf(xs[sl, i:i + 1]) for i, d in enumerate(rest))
            ratios[sl] = cond - joint.logpdf(y[sl])
        # nothing was peeled here, so the estimate is the mutual information itself
        mc = monte_carlo_mean(ratios)
        hj_nats += mc.value + sum(h.nats for h in hxs)
        err += mc.error_estimate
        methods.append("monte-carlo")
        widen = 10.0
    lhs = hj_nats - sum(h.nats for h in hxs)
    return make_report("sato", lhs, rhs, "le", err, {"dists": dists, "noise": z, "seed": seed},
                       reference="Sato's inequality", method=combine_method(*methods),
                       equality_expected=False, widen=widen)


def check_saddlepoint(x: Distribution, z: Distribution) -> InequalityReport:
    """I(X + Z; Z) >= I(X* + Z; Z) for the Gaussian X* with the same second moments."""
    k = _noise_cov(z, x.dim)
    lhs, err, method = _noise_mi(x, k)
    _, cov = x.mean_cov()
    rhs = gaussian_entropy(cov + k) - gaussian_entropy(cov)
    return make_report("saddlepoint", lhs, rhs, "ge", err, {"dist": x, "noise": z},
                       reference="Gaussian noise is the worst additive noise", method=method,
                       equality_expected=isinstance(x.impl, GaussianND))


def check_contrast(fam: WeightedFamily) -> InequalityReport:
    """-h(sum a_i X_i) <= max_i -h(X_i): negentropy is a contrast."""
    act = fam.active()
    hsum = _entropy(fam.mixture_sum())
    hs = [_entropy(d) for _, d in act]
    lhs = -hsum.nats
    rhs = max(-h.nats for h in hs)
    err = hsum.error_estimate + max(h.error_estimate for h in hs)
    return make_report("contrast", lhs, rhs, "le", err, fam.as_inputs(),
                       reference="negentropy contrast property",
                       method=combine_method(hsum.method, *[h.method for h in hs]),
                       equality_expected=gaussian_equality_case([d for _, d in act], "identical"))


# ----------------------------------------------------------------------
# data processing


@dataclass(frozen=True, eq=False)
class GaussianChain:
    """theta -> X = theta + N1 -> Y = A X + N2 with Gaussian stages."""

    prior: Distribution
    noise1_cov: np.ndarray
    matrix: np.ndarray
    noise2_cov: np.ndarray

    def __post_init__(self):
        n = self.prior.dim
        k1 = _sym_matrix(self.noise1_cov, "noise1_cov")
        k2 = _sym_matrix(self.noise2_cov, "noise2_cov", pd=False)
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if k1.shape[0] != n or k2.shape[0] != n or a.shape != (n, n):
            raise DimensionMismatch("chain stages must share the dimension of the prior")
        if abs(np.linalg.det(a)) < 1e-12:
            raise DomainError("the second stage needs an invertible matrix")
        object.__setattr__(self, "noise1_cov", k1)
        object.__setattr__(self, "noise2_cov", k2)
        object.__setattr__(self, "matrix", a)

    def effective_noise_cov(self):
        # A^-1 Y = theta + N1 + A^-1 N2
        ainv = np.linalg.inv(self.matrix)
        return self.noise1_cov + ainv @ self.noise2_cov @ ainv.T


def check_dpi(chain: GaussianChain) -> tuple[InequalityReport, InequalityReport]:
    """Var(theta|Y) >= Var(theta|X) and J_theta(Y) <= J_theta(X) for the translation family."""
    n = chain.prior.dim
    zero = np.zeros(n)
    mx = mmse(ChannelSpec(chain.prior, GaussianND(zero, chain.noise1_cov), NOISE_SCALED, 1.0))
    my = mmse(ChannelSpec(chain.prior, GaussianND(zero, chain.effective_noise_cov()), NOISE_SCALED, 1.0))
    lossless = not np.any(chain.noise2_cov)
    inputs = {"prior": chain.prior, "noise1_cov": chain.noise1_cov, "matrix": chain.matrix,
              "noise2_cov": chain.noise2_cov}
    r1 = make_report("dpi-mmse", my.value, mx.value, "ge", mx.error_estimate + my.error_estimate, inputs,
                     reference="data processing inequality for the MMSE",
                     method=combine_method(mx.method, my.method), equality_expected=lossless)
    a = chain.matrix
    jx = float(np.trace(np.linalg.inv(chain.noise1_cov)))
    jy = float(np.trace(a.T @ np.linalg.solve(a @ chain.noise1_cov @ a.T + chain.noise2_cov, a)))
    r2 = make_report("dpi-fisher", jy, jx, "le", 0.0, inputs,
                     reference="data processing inequality for Fisher information",
                     equality_expected=lossless)
    return r1, r2
