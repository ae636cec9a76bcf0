"""Covariance-constrained EPI: the Gaussian optimizer of h(X) - mu h(X + Z) under Cov(X) <= C."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..distributions import Distribution, GaussianND, _psd_sqrt, _sym_matrix, linear_combination
from ..errors import ConstraintViolated, DimensionMismatch, DomainError
from ..functionals import entropy, gaussian_entropy
from ..inequalities import InequalityReport, make_report
from ..numerics import combine_method

log = logging.getLogger(__name__)

KKT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LVProblemSpec:
    cap: np.ndarray
    noise_cov: np.ndarray
    mu: float

    def __post_init__(self):
        c = _sym_matrix(self.cap, "cap")
        k = _sym_matrix(self.noise_cov, "noise_cov")
        if c.shape != k.shape:
            raise DimensionMismatch("cap and noise covariance differ in size")
        if not self.mu > 1:
            raise DomainError("mu must exceed 1 (mu = 1 has no finite maximizer)")
        object.__setattr__(self, "cap", c)
        object.__setattr__(self, "noise_cov", k)
        object.__setattr__(self, "mu", float(self.mu))


@dataclass(frozen=True)
class LVSolution:
    cov: np.ndarray
    multiplier: np.ndarray
    kkt_residual: float
    slackness: float
    objective: float
    trace: list = field(default_factory=list, compare=False)


def lv_objective(cov, noise_cov, mu: float) -> float:
    """1/2 log|V| - mu/2 log|V + K| (the Gaussian value of h(X) - mu h(X+Z) up to constants)."""
    s1, l1 = np.linalg.slogdet(cov)
    s2, l2 = np.linalg.slogdet(cov + noise_cov)
    if s1 <= 0 or s2 <= 0:
        return -np.inf
    return 0.5 * l1 - 0.5 * mu * l2


def kkt_multiplier(cov, noise_cov, mu: float) -> np.ndarray:
    m = 0.5 * np.linalg.inv(cov) - 0.5 * mu * np.linalg.inv(cov + noise_cov)
    return 0.5 * (m + m.T)


def kkt_residual(cov, multiplier, cap) -> float:
    """Largest violation among dual feasibility (M >= 0), primal feasibility (V <= C)
    and complementary slackness tr(M (C - V)) = 0.

    Stationarity holds by construction of M from V.
    """
    dual = max(0.0, -float(np.linalg.eigvalsh(multiplier)[0]))
    primal = max(0.0, float(np.linalg.eigvalsh(cov - cap)[-1]))
    comp = abs(float(np.trace(multiplier @ (cap - cov))))
    return max(dual, primal, comp)


def lv_solve(spec: LVProblemSpec, *, verbose: bool = False) -> LVSolution:
    """Exact maximizer in the noise-whitened eigenbasis of the cap.

    With W = K^-1/2 V K^-1/2 the objective is a sum of the unimodal function
    g(w) = log(w)/2 - mu log(1 + w)/2 over the eigenvalues of W, peaked at
    1/(mu - 1).  W <= C' bounds the sorted eigenvalues by those of C', so
    clipping the eigenvalues of C' at the peak attains the bound.
    """
    k, c, mu = spec.noise_cov, spec.cap, spec.mu
    kh = _psd_sqrt(k)
    khi = np.linalg.inv(kh)
    cw = khi @ c @ khi
    cw = 0.5 * (cw + cw.T)
    lam, q = np.linalg.eigh(cw)
    peak = 1.0 / (mu - 1.0)
    w = np.minimum(lam, peak)
    trace = [{"step": "whiten", "cap_eigenvalues": lam.tolist(), "peak": peak},
             {"step": "clip", "eigenvalues": w.tolist(), "binding": (lam <= peak).tolist()}]
    v = kh @ (q * w) @ q.T @ kh
    v = 0.5 * (v + v.T)
    m = kkt_multiplier(v, k, mu)
    residual = kkt_residual(v, m, c)
    slack = float(abs(np.trace(m @ (c - v))))
    ev = np.linalg.eigvalsh(m)
    trace.append({"step": "kkt", "residual": residual, "slackness": slack, "multiplier_min_eig": float(ev[0])})
    if verbose:
        for entry in trace:
            log.info("lv_solve %s", entry)
    return LVSolution(v, m, residual, slack, lv_objective(v, k, mu), trace)


def grid_search_scalar(cap: float, noise_var: float, mu: float, step: float = 1e-6) -> float:
    """Argmax of the scalar objective over v in (0, cap] on a uniform grid."""
    v = np.arange(step, cap + 0.5 * step, step)
    f = 0.5 * np.log(v) - 0.5 * mu * np.log(v + noise_var)
    return float(v[int(np.argmax(f))])


def random_feasible_cov(rng: np.random.Generator, cap: np.ndarray, *, max_tries: int = 10000) -> np.ndarray:
    """Rejection-sample a positive definite V with V <= cap."""
    n = cap.shape[0]
    scale = float(np.max(np.linalg.eigvalsh(cap)))
    for _ in range(max_tries):
        g = rng.standard_normal((n, n)) * np.sqrt(scale / n)
        v = g @ g.T + 1e-6 * np.eye(n)
        if np.linalg.eigvalsh(cap - v)[0] >= 0:
            return v
    raise DomainError("could not sample a feasible covariance under the cap")


def check_lv_epi(x1: Distribution, x2: Distribution, a=(2**-0.5, 2**-0.5), alpha: float = 1.0) -> InequalityReport:
    """h(a1 X1 + a2 X2) >= a1^2 h(X1) + a2^2 h(X2) + Delta under Cov(X1) <= Cov(X2), X2 Gaussian.

    Delta = h(Z) - a1^2 h(Z1) - a2^2 h(Z2) with Cov(Z_i) = alpha Cov(X_i) and
    Z = a1 Z1 + a2 Z2; it is computed in closed form and must be nonnegative.
    """
    if not isinstance(x2.impl, GaussianND):
        raise DomainError("X2 must be Gaussian")
    if x1.dim != x2.dim:
        raise DimensionMismatch("X1 and X2 differ in dimension")
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    a = np.asarray(a, dtype=float).ravel()
    a = a / np.linalg.norm(a)
    _, k1 = x1.mean_cov()
    k2 = x2.impl.cov
    if np.linalg.eigvalsh(k2 - k1)[0] < -1e-12 * max(1.0, float(np.max(np.abs(k2)))):
        raise ConstraintViolated("Cov(X1) <= Cov(X2) fails")
    w1, w2 = a**2
    delta = (gaussian_entropy(alpha * (w1 * k1 + w2 * k2))
             - w1 * gaussian_entropy(alpha * k1) - w2 * gaussian_entropy(alpha * k2))
    hsum = entropy(linear_combination(a, [x1, x2]))
    h1, h2 = entropy(x1), entropy(x2)
    rhs = w1 * h1.nats + w2 * h2.nats + delta
    err = hsum.error_estimate + w1 * h1.error_estimate + w2 * h2.error_estimate
    r = make_report("lv-epi", hsum.nats, rhs, "ge", err,
                    {"x1": x1, "x2": x2, "a": a, "alpha": alpha},
                    reference="covariance-constrained entropy power inequality",
                    method=combine_method(hsum.method, h1.method, h2.method),
                    equality_expected=isinstance(x1.impl, GaussianND),
                    details={"delta": float(delta), "delta_nonnegative": bool(delta >= -1e-12)})
    return r


__all__ = ["LVProblemSpec", "LVSolution", "lv_solve", "lv_objective", "kkt_multiplier", "kkt_residual", "grid_search_scalar",
           "random_feasible_cov", "check_lv_epi"]
