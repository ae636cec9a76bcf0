"""Concavity of the entropy power along an added Gaussian perturbation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..distributions import Distribution, GaussianND, convolve_gaussian
from ..errors import DomainError
from ..functionals import entropy, entropy_power
from ..inequalities import InequalityReport, make_report, tolerance_for
from ..numerics import combine_method

COSTA_GRID = (0.1, 0.25, 0.5, 1.0, 2.0, 3.5, 5.0)
SECOND_DIFF_TOL = 1e-4


@dataclass(frozen=True)
class CostaResult:
    t_grid: tuple
    N_values: list
    second_differences: list
    slopes: list
    slopes_nonincreasing: bool
    shannon_slack: float
    error_estimate: float
    report: InequalityReport


def _white_cov(z: Distribution, n: int) -> np.ndarray:
    core = z.impl
    if not isinstance(core, GaussianND) or core.dim != n:
        raise DomainError("the perturbation must be a Gaussian vector of the same dimension")
    var = float(core.cov[0, 0])
    if not np.allclose(core.cov, var * np.eye(n), atol=1e-12):
        raise DomainError("the perturbation must be white")
    return core.cov


def costa_concavity(x: Distribution, z: Distribution | None = None,
                    t_grid: Sequence[float] = COSTA_GRID) -> CostaResult:
    """Entropy powers N(X + sqrt(t) Z) on the grid and their second differences.

    Second differences are differences of consecutive chord slopes, so a
    concave sequence has all of them <= 0 on any spacing.  The slope from the
    origin delta(t) = (N(X + sqrt(t) Z) - N(X)) / t must be nonincreasing.
    """
    n = x.dim
    z = z if z is not None else GaussianND(np.zeros(n), np.eye(n))
    k = _white_cov(z, n)
    t = np.asarray(sorted(float(v) for v in t_grid))
    if t.size < 3 or t[0] <= 0:
        raise DomainError("need at least three positive grid points")
    base_h = entropy(x)
    base = entropy_power(x, base_h)
    powers = [entropy_power(convolve_gaussian(x, float(tv), k)) for tv in t]
    vals = np.array([p.value for p in powers])
    errs = np.array([p.error_estimate for p in powers])
    chord = np.diff(vals) / np.diff(t)
    second = np.diff(chord)
    gaps = np.diff(t)
    # error of one chord-slope difference from the entropy-power errors of its three points
    second_err = (errs[:-2] / gaps[:-1] + errs[1:-1] * (1 / gaps[:-1] + 1 / gaps[1:]) + errs[2:] / gaps[1:])
    slopes = (vals - base.value) / t
    slope_err = (errs + base.error_estimate) / t
    slope_tol = tolerance_for(float(np.max(slope_err)))
    nonincreasing = bool(np.all(np.diff(slopes) <= slope_tol))
    noise_power = float(np.exp(2 * (0.5 * np.linalg.slogdet(2 * np.pi * np.e * k)[1]) / n) / (2 * np.pi * np.e))
    n1 = entropy_power(convolve_gaussian(x, 1.0, k))
    shannon = n1.value - base.value - noise_power
    worst = int(np.argmax(second))
    err = float(second_err[worst])
    report = make_report("costa-concavity", float(second[worst]), 0.0, "le", err,
                         {"x": x, "noise": z, "t_grid": t},
                         reference="concavity of entropy power in the added Gaussian noise power",
                         method=combine_method(base.method, *[p.method for p in powers]),
                         equality_expected=isinstance(x.impl, GaussianND), floor=SECOND_DIFF_TOL,
                         details={"slopes_nonincreasing": nonincreasing, "shannon_slack": shannon})
    return CostaResult(tuple(t.tolist()), vals.tolist(), second.tolist(), slopes.tolist(), nonincreasing,
                       float(shannon), float(np.max(second_err)), report)


__all__ = ["COSTA_GRID", "SECOND_DIFF_TOL", "CostaResult", "costa_concavity"]
