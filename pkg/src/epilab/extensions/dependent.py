"""Sufficient conditions for the EPI of a dependent pair, in Fisher-information form."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..distributions import Distribution, GaussianND, LinearImage, MixtureND, convolve_gaussian
from ..errors import DimensionMismatch, DomainError
from ..functionals import entropy, fisher_info
from ..inequalities import InequalityReport, make_report, tolerance_for
from ..numerics import combine_method

DEFAULT_T_GRID = (0.1, 1.0, 10.0)
_SELECT = (np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))


@dataclass(frozen=True, eq=False)
class DependentPairSpec:
    """A bivariate joint law, the perturbation level t and a coefficient pair."""

    joint: Distribution
    t: float = 1.0
    coeffs: tuple = (2**-0.5, 2**-0.5)

    def __post_init__(self):
        if self.joint.dim != 2:
            raise DimensionMismatch("the joint law must be bivariate")
        core = self.joint.impl
        comps = core.components if isinstance(core, MixtureND) else [core]
        if not all(isinstance(c.impl, GaussianND) for c in comps) or len(comps) > 2:
            raise DomainError("joints are bivariate Gaussians or two-component Gaussian mixtures")
        if not self.t > 0:
            raise DomainError("the perturbation level t must be positive")
        a = np.asarray(self.coeffs, dtype=float).ravel()
        if a.size != 2:
            raise DimensionMismatch("two coefficients are required")
        object.__setattr__(self, "coeffs", tuple(float(v) for v in a))

    def perturbed(self, t: float | None = None) -> Distribution:
        t = self.t if t is None else t
        core = self.joint.impl
        if isinstance(core, MixtureND):
            return MixtureND(core.weights, [GaussianND(c.impl.mean, c.impl.cov + t * np.eye(2))
                                            for c in core.components])
        return convolve_gaussian(core, t, np.eye(2))

    def marginal(self, i: int, t: float | None = None) -> Distribution:
        return LinearImage(_SELECT[i], self.perturbed(t) if t != 0 else self.joint)

    def as_inputs(self):
        return {"joint": self.joint, "t": self.t, "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class ConditionResult:
    matrix_gap: np.ndarray
    holds: bool
    takano_holds: bool
    johnson_holds: bool
    min_eigenvalue: float
    takano_slack: float
    johnson_slack: float
    tolerance: float
    error_estimate: float
    details: dict = field(default_factory=dict, compare=False)


def dependent_condition(spec: DependentPairSpec, t: float | None = None) -> ConditionResult:
    """diag(J(X_i,t)) - J(X_t), with Takano's and Johnson's reduced two-variable forms.

    Takano's slack is divided by (1/J1 + 1/J2)^2 so that it reads as the
    quadratic form of the gap at the normalized weights, like the other two.
    """
    t = spec.t if t is None else t
    jt = fisher_info(spec.perturbed(t))
    jm = [fisher_info(spec.marginal(i, t)) for i in range(2)]
    joint = jt.matrix
    j1, j2 = jm[0].scalar, jm[1].scalar
    gap = np.diag([j1, j2]) - joint
    err = jt.error_estimate + jm[0].error_estimate + jm[1].error_estimate
    tol = tolerance_for(err)
    min_eig = float(np.linalg.eigvalsh(0.5 * (gap + gap.T))[0])
    s = 1.0 / j1 + 1.0 / j2
    takano_rhs = joint[0, 0] / j1**2 + joint[1, 1] / j2**2 + 2 * joint[0, 1] / (j1 * j2)
    takano = (s - takano_rhs) / s**2
    denom = joint[0, 0] + joint[1, 1] - 2 * joint[0, 1]
    johnson = 1.0 / s - float(np.linalg.det(joint)) / denom
    return ConditionResult(gap, min_eig >= -tol, takano >= -tol, johnson >= -tol, min_eig,
                           float(takano), float(johnson), tol, err,
                           {"t": t, "joint_fisher": joint, "marginal_fisher": (j1, j2),
                            "method": combine_method(jt.method, jm[0].method, jm[1].method)})


def _independent_equal_gaussians(spec):
    core = spec.joint.impl
    if not isinstance(core, GaussianND):
        return False
    c = core.cov
    return abs(c[0, 1]) < 1e-14 and abs(c[0, 0] - c[1, 1]) < 1e-12 * c[0, 0]


def check_dependent_epi(spec: DependentPairSpec, coeffs=None, *, t_grid=DEFAULT_T_GRID) -> InequalityReport:
    """h(a1 X1 + a2 X2) >= a1^2 h(X1) + a2^2 h(X2) for the dependent pair.

    The condition is evaluated on the grid (plus spec.t); only when it holds
    everywhere does the report claim the inequality.
    """
    a = np.asarray(spec.coeffs if coeffs is None else coeffs, dtype=float)
    a = a / np.linalg.norm(a)
    grid = sorted(set(float(v) for v in t_grid) | {float(spec.t)})
    conds = [dependent_condition(spec, t) for t in grid]
    claimed = all(c.holds for c in conds)
    hsum = entropy(LinearImage(a[None, :], spec.joint))
    hs = [entropy(LinearImage(_SELECT[i], spec.joint)) for i in range(2)]
    rhs = a[0] ** 2 * hs[0].nats + a[1] ** 2 * hs[1].nats
    err = hsum.error_estimate + a[0] ** 2 * hs[0].error_estimate + a[1] ** 2 * hs[1].error_estimate
    expected = _independent_equal_gaussians(spec) or bool(np.count_nonzero(a) == 1)
    return make_report("dependent-epi", hsum.nats, rhs, "ge", err,
                       {**spec.as_inputs(), "coeffs": a, "t_grid": grid},
                       reference="entropy power inequality for dependent variables under the Fisher condition",
                       method=combine_method(hsum.method, *[h.method for h in hs]),
                       equality_expected=expected,
                       details={"condition_holds": claimed,
                                "min_eigenvalues": [c.min_eigenvalue for c in conds]})


def gaussian_gap_top_left(rho: float, t: float) -> float:
    """Closed form of the top-left gap entry for unit-variance Gaussians with correlation rho."""
    s = 1.0 + t
    return 1.0 / s - s / (s * s - rho * rho)


def random_joint(rng: np.random.Generator) -> Distribution:
    """A random bivariate Gaussian or two-component Gaussian-mixture joint."""
    def cov():
        sd = rng.uniform(0.5, 1.5, 2)
        rho = rng.uniform(-0.9, 0.9)
        return np.array([[sd[0] ** 2, rho * sd[0] * sd[1]], [rho * sd[0] * sd[1], sd[1] ** 2]])
    if rng.random() < 0.5:
        return GaussianND(rng.uniform(-1, 1, 2), cov())
    w = rng.uniform(0.2, 0.8)
    return MixtureND([w, 1 - w], [GaussianND(rng.uniform(-2, 2, 2), cov()),
                                   GaussianND(rng.uniform(-2, 2, 2), cov())])


__all__ = ["DependentPairSpec", "ConditionResult", "dependent_condition", "check_dependent_epi",
           "gaussian_gap_top_left", "random_joint", "DEFAULT_T_GRID"]
