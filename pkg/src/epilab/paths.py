"""Entropy along Gaussian perturbation paths: de Bruijn identities and integral formulas."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import SIGNAL_SCALED, ChannelSpec, mmse, mutual_info_additive
from .distributions import Distribution, GaussianND, _sym_matrix, convolve_gaussian, linear_combination
from .errors import DimensionMismatch, DomainError, NonGaussianPositiveT, NonSmoothDensity, NumericalFailure
from .errors import TruncationWarning
from .functionals import entropy, fisher_info
from .numerics import NumericResult, combine_method, finite_difference, integrate

REPRESENTATIONS = ("i1-fisher-noise", "i2-fisher-interp", "i3-mmse-signal", "i4-mmse-interp")
DEFAULT_T_GRID = tuple(np.logspace(-3, 1, 25))
MATRIX_SCALES = (1e-1, 1e-2, 1e-3)
# kinked noise densities (Laplace) leave a t^(3/2) term in I(X; sqrt(t) X + Z), so the
# fitted slope is off by O(sqrt(t)); the default fit grid sits close to zero
SLOPE_T_GRID = (1e-6, 2e-6, 3e-6)
_LOG_2PIE = math.log(2 * math.pi * math.e)

# h(X + sqrt(t) Z) - h(X) can carry half-integer powers of t at t = 0 (kinked densities);
# these are the error terms removed by extrapolation of the one-sided difference
_BOUNDARY_EXPONENTS = (0.5, 1.5, 2.0, 2.5)


@dataclass(frozen=True)
class PathRecord:
    t: float
    value: float
    integrand: float
    error: float = 0.0


@dataclass(frozen=True)
class PathEstimate:
    entropy_nats: float
    representation: str
    t_grid: tuple
    truncation_T: float
    error_estimate: float
    records: tuple = field(default=(), repr=False)
    tail: float = 0.0

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        grid = np.asarray(self.t_grid, dtype=float)
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")


def _white(n):
    return GaussianND(np.zeros(n), np.eye(n))


# ----------------------------------------------------------------------
# de Bruijn


def _perturbed(x: Distribution, z: Distribution, t: float) -> Distribution:
    if t == 0:
        return x
    if isinstance(z.impl, GaussianND):
        y = convolve_gaussian(x, t, z.impl.cov)
        mu = z.impl.mean
        return y.shifted(math.sqrt(t) * mu) if np.any(mu) else y
    return linear_combination([1.0, math.sqrt(t)], [x, z])


def debruijn_residual(x: Distribution, z: Distribution, t0: float = 0.0) -> NumericResult:
    """d/dt h(X + sqrt(t) Z) at t0 minus half of tr(J(X + sqrt(t0) Z) Cov(Z))."""
    if x.dim != z.dim:
        raise DimensionMismatch("signal and perturbation dimensions differ")
    if not t0 >= 0:
        raise DomainError("t0 must be nonnegative")
    gaussian_z = isinstance(z.impl, GaussianND)
    if t0 > 0 and not gaussian_z:
        raise NonGaussianPositiveT("the identity away from t = 0 needs Gaussian perturbations")
    _, kz = z.mean_cov()
    base = _perturbed(x, z, t0)
    if base.has_jumps:
        raise NonSmoothDensity("the perturbed law has a discontinuous density")
    j = fisher_info(base)
    rhs = 0.5 * float(np.trace(j.matrix @ kz))

    errs = [0.0]

    def h(t):
        e = entropy(_perturbed(x, z, t))
        errs[0] = max(errs[0], e.error_estimate)
        return e.nats

    if t0 == 0:
        d = finite_difference(h, 0.0, 1, exponents=_BOUNDARY_EXPONENTS)
        amplification = 3e4  # sum of |coefficients| / h over the extrapolation table
    else:
        d = finite_difference(h, t0, 1, exponents=(2.0, 4.0))
        amplification = 2e3 / max(1e-3, 1e-2 * t0)
    err = d.error_estimate + errs[0] * amplification + 0.5 * j.error_estimate * float(np.abs(kz).max())
    return NumericResult(d.value - rhs, err, "quadrature", note="finite-difference")


def debruijn_matrix_residual(x: Distribution, k0, scales: Sequence[float] = MATRIX_SCALES) -> NumericResult:
    """Ratios |h(X + Z_K) - h(X) - tr(J(X) K)/2| / ||K|| along K = c K0.

    The value is the array of ratios in the order of ``scales``; the
    first-order expansion holds when they decrease towards zero.
    """
    k0 = _sym_matrix(k0, "K0", pd=False)
    n = x.dim
    if k0.shape[0] != n:
        raise DimensionMismatch("K0 does not match the dimension of X")
    if n > 3:
        from .errors import UnsupportedDimension
        raise UnsupportedDimension("matrix de Bruijn check is limited to n <= 3")
    if not np.any(k0):
        return NumericResult(np.zeros(len(scales)), 0.0, "closed-form", note="K0 = 0")
    hx = entropy(x)
    j = fisher_info(x)
    ratios, err, methods = [], 0.0, [hx.method, j.method]
    for c in scales:
        k = c * k0
        hk = entropy(convolve_gaussian(x, 1.0, k))
        size = float(np.linalg.norm(k))
        diff = hk.nats - hx.nats - 0.5 * float(np.trace(j.matrix @ k))
        ratios.append(abs(diff) / size)
        err = max(err, (hk.error_estimate + hx.error_estimate + 0.5 * j.error_estimate * size) / size)
        methods.append(hk.method)
    return NumericResult(np.array(ratios), err, combine_method(*methods))


# ----------------------------------------------------------------------
# integral representations


def _gaussian_tail(rep: str, cov: np.ndarray, T: float) -> float:
    """Integral beyond T of the i1 or i3 integrand for a Gaussian with covariance ``cov``."""
    lam = np.linalg.eigvalsh(cov)
    if rep == "i1-fisher-noise":
        # int_T^inf [1/(lam + t) - 1/(1 + t)] dt
        return float(np.sum(np.log1p(T) - np.log(lam + T)))
    # int_T^inf [1/(1 + t) - lam/(1 + lam t)] dt
    return float(np.sum(np.log1p(lam * T) - np.log(lam) - np.log1p(T)))


def entropy_via_path(
    x: Distribution,
    representation: str = "i1-fisher-noise",
    truncation_T: float = 1e3,
    *,
    abs_tol: float = 1e-7,
    rel_tol: float = 1e-7,
    error_budget: float = 1e-2,
) -> PathEstimate:
    """Differential entropy from one of the four path-integral formulas.

    i1 integrates J(X + sqrt(t) Z) - n/(1+t) over t > 0, i2 integrates
    (J(sqrt(t) X + sqrt(1-t) Z) - n)/t over (0, 1), i3 integrates
    n/(1+t) - Var(X | sqrt(t) X + Z) over t > 0 and i4 integrates
    (n - Var(X | sqrt(1-t) X + sqrt(t) Z)/t)/t over (0, 1).  In every case
    h(X) = (n/2) log(2 pi e) - (1/2) * integral.  The infinite ranges are
    mapped by u = t/(1+t) and cut at t = truncation_T; the remainder is
    added from its large-t behaviour.
    """
    if representation not in REPRESENTATIONS:
        raise ValueError(f"representation must be one of {REPRESENTATIONS}")
    if not truncation_T > 0:
        raise DomainError("truncation_T must be positive")
    n = x.dim
    z = _white(n)
    _, cov = x.mean_cov()
    records: dict[float, PathRecord] = {}
    node_err: dict[float, float] = {}
    methods = set()

    def fisher_at(s):
        # J(X + sqrt(s) Z)
        f = fisher_info(convolve_gaussian(x, s, np.eye(n)))
        methods.add(f.method)
        return f.scalar, f.error_estimate

    def mmse_at(snr):
        # Var(X | sqrt(snr) X + Z)
        m = mmse(ChannelSpec(x, z, SIGNAL_SCALED, snr))
        methods.add(m.method)
        return m.value, m.error_estimate

    def point(rep, t):
        """(path quantity, integrand in t, error of the integrand)."""
        if rep == "i1-fisher-noise":
            j, e = fisher_at(t)
            return j, j - n / (1 + t), e
        if rep == "i2-fisher-interp":
            j, e = fisher_at((1 - t) / t)
            j, e = j / t, e / t
            return j, (j - n) / t, e / t
        if rep == "i3-mmse-signal":
            m, e = mmse_at(t)
            return m, n / (1 + t) - m, e
        m, e = mmse_at((1 - t) / t)
        return m, (n - m / t) / t, e / (t * t)

    infinite = representation in ("i1-fisher-noise", "i3-mmse-signal")

    def integrand(us):
        out = np.empty(us.size)
        for i, u in enumerate(us):
            u = float(u)
            t = u / (1 - u) if infinite else u
            q, g, e = point(representation, t)
            jac = 1.0 / (1 - u) ** 2 if infinite else 1.0
            out[i] = g * jac
            node_err[u] = e * jac
            records[t] = PathRecord(t, q, g, e)
        return out

    upper = truncation_T / (1 + truncation_T) if infinite else 1.0
    res = integrate(integrand, 0.0, upper, abs_tol=abs_tol, rel_tol=rel_tol, max_panels=4000)
    # pointwise errors of J or the MMSE, carried through the same integral
    us = np.array(sorted(node_err))
    propagated = float(np.trapezoid([node_err[u] for u in us], us)) if us.size > 1 else 0.0
    total, err = float(res.value), res.error_estimate + propagated

    tail = 0.0
    if infinite:
        gauss = _gaussian_tail(representation, cov, truncation_T)
        _, g_end, e_end = point(representation, truncation_T)
        if representation == "i1-fisher-noise":
            # the Gaussian form matches the integrand through order t^-2
            tail = gauss
        else:
            # the integrand decays like c / t^2 with c set by J(X), not by Cov(X)
            tail = g_end * truncation_T**2 / truncation_T
        tail_err = abs(tail - gauss) + abs(g_end - _gaussian_integrand(representation, cov, truncation_T)) * truncation_T
        tail_err = min(tail_err, abs(tail) + abs(gauss)) + e_end * truncation_T
        total += tail
        err += tail_err
        if 0.5 * tail_err > 0.5 * error_budget:
            warnings.warn(f"path tail beyond T={truncation_T:g} contributes error {0.5 * tail_err:.3g}",
                          TruncationWarning, stacklevel=2)

    h = 0.5 * n * _LOG_2PIE - 0.5 * total
    if not math.isfinite(h):
        raise NumericalFailure("path integral did not produce a finite entropy")
    grid = tuple(sorted(records))
    return PathEstimate(h, representation, grid, float(truncation_T), 0.5 * err,
                        tuple(records[t] for t in grid), 0.5 * tail)


def _gaussian_integrand(rep, cov, t):
    lam = np.linalg.eigvalsh(cov)
    if rep == "i1-fisher-noise":
        return float(np.sum(1 / (lam + t) - 1 / (1 + t)))
    return float(np.sum(1 / (1 + t) - lam / (1 + lam * t)))


# ----------------------------------------------------------------------
# small-SNR behaviour


def small_snr_slope(z: Distribution, x: Distribution, t_grid: Sequence[float] = SLOPE_T_GRID,
                    points: int = 3) -> NumericResult:
    """Least-squares slope through the origin of I(X; sqrt(t) X + Z) on the smallest grid values."""
    if z.dim != 1 or x.dim != 1:
        raise DimensionMismatch("the small-SNR slope is computed for scalar channels")
    grid = np.sort(np.asarray([t for t in t_grid if t > 0], dtype=float))[:points]
    if grid.size == 0:
        raise DomainError("t_grid has no positive values")
    vals, errs, methods = [], [], []
    for t in grid:
        r = mutual_info_additive(x, z, float(t))
        vals.append(r.value)
        errs.append(r.error_estimate)
        methods.append(r.method)
    vals, errs = np.array(vals), np.array(errs)
    denom = float(grid @ grid)
    slope = float(grid @ vals) / denom
    err = float(grid @ errs) / denom
    if not math.isfinite(slope):
        raise NumericalFailure("slope fit failed")
    return NumericResult(slope, err, combine_method(*methods))


def expected_slope(z: Distribution, x: Distribution) -> float:
    """Half of J(Z) times Var(X): the limiting small-SNR slope."""
    _, vx = x.mean_cov()
    return 0.5 * fisher_info(z).scalar * float(vx[0, 0])


def mutual_info_curve(z: Distribution, x: Distribution, t_grid: Sequence[float]) -> list[tuple[float, float, float]]:
    """(t, I(X; sqrt(t) X + Z), error) over a grid."""
    out = []
    for t in t_grid:
        r = mutual_info_additive(x, z, float(t))
        out.append((float(t), r.value, r.error_estimate))
    return out
