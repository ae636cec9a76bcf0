"""Entropy, Fisher-information and mutual-information inequalities for A X with independent entries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..distributions import Distribution, GaussianND, LinearImage, ProductND, convolve_gaussian
from ..errors import DimensionMismatch, DomainError, RankDeficient, UnsupportedDimension
from ..functionals import entropy, entropy_power, fisher_info, gaussian_entropy
from ..inequalities import InequalityReport, make_report
from ..numerics import combine_method
from ..serialize import digest

ZF_EPI_FORMS = ("power", "gaussian", "concavity")
ORTHONORMAL_TOL = 1e-10
QUAD_TOL_2D = 1e-5


@dataclass(frozen=True, eq=False)
class LinearMixSpec:
    """Full-row-rank r x m matrix acting on m independent scalar marginals."""

    matrix: np.ndarray
    marginals: tuple

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        margs = tuple(self.marginals)
        r, m = a.shape
        if m != len(margs):
            raise DimensionMismatch(f"matrix has {m} columns but {len(margs)} marginals were given")
        if any(d.dim != 1 for d in margs):
            raise DimensionMismatch("marginals must be one-dimensional")
        if r > m or np.linalg.matrix_rank(a) < r:
            raise RankDeficient("the matrix must have full row rank")
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "marginals", margs)

    @property
    def rows(self):
        return self.matrix.shape[0]

    @property
    def orthonormal(self):
        a = self.matrix
        return bool(np.max(np.abs(a @ a.T - np.eye(self.rows))) <= ORTHONORMAL_TOL)

    def image(self) -> Distribution:
        if self.rows > 2:
            raise UnsupportedDimension("joint images are limited to r <= 2")
        return LinearImage(self.matrix, ProductND(list(self.marginals)))

    def as_inputs(self):
        return {"matrix": self.matrix, "marginals": list(self.marginals)}


def _require_orthonormal(spec):
    if not spec.orthonormal:
        raise DomainError("this form needs orthonormal rows (A A^T = I)")


# the three EPI forms share one image entropy; joint images cost seconds each
_IMAGE_ENTROPY_CACHE: dict = {}
_CACHE_LIMIT = 64


def _image_entropy(spec):
    key = digest("zf-image", spec.as_inputs())
    if key in _IMAGE_ENTROPY_CACHE:
        return _IMAGE_ENTROPY_CACHE[key]
    img = spec.image()
    if spec.rows == 1:
        h = entropy(img)
    else:
        h = entropy(img, abs_tol=QUAD_TOL_2D, rel_tol=QUAD_TOL_2D)
    if len(_IMAGE_ENTROPY_CACHE) >= _CACHE_LIMIT:
        _IMAGE_ENTROPY_CACHE.pop(next(iter(_IMAGE_ENTROPY_CACHE)))
    _IMAGE_ENTROPY_CACHE[key] = h
    return h


def _selection_like(a):
    # square (hence invertible) maps and rescaled sub-vectors lose nothing
    live = np.abs(a) > 1e-14
    if a.shape[0] == a.shape[1]:
        return True
    return bool(np.all(live.sum(axis=1) == 1) and np.all(live.sum(axis=0) <= 1))


def _equal_gaussians(margs, a):
    used = [d for d, col in zip(margs, a.T) if np.any(col != 0)]
    if not all(isinstance(d.impl, GaussianND) for d in used):
        return False
    vs = [float(d.impl.cov[0, 0]) for d in used]
    return bool(np.allclose(vs, vs[0], rtol=1e-9))


def check_zf_epi(spec: LinearMixSpec, form: str = "concavity") -> InequalityReport:
    """Linear-transform EPI in its power, Gaussian-comparison or concavity form."""
    if form not in ZF_EPI_FORMS:
        raise ValueError(f"form must be one of {ZF_EPI_FORMS}")
    a, r = spec.matrix, spec.rows
    hs = [entropy(d) for d in spec.marginals]
    himg = _image_entropy(spec)
    method = combine_method(himg.method, *[h.method for h in hs])
    inputs = {**spec.as_inputs(), "form": form}
    weights = (a**2).sum(axis=0)
    if form == "concavity":
        _require_orthonormal(spec)
        rhs = float(sum(w * h.nats for w, h in zip(weights, hs)))
        err = himg.error_estimate + float(sum(w * h.error_estimate for w, h in zip(weights, hs)))
        expected = _equal_gaussians(spec.marginals, a) or _selection_like(a)
        return make_report("zf-epi-concavity", himg.nats, rhs, "ge", err, inputs,
                           reference="linear-transform entropy power inequality, concavity form",
                           method=method, equality_expected=expected)
    powers = [entropy_power(d, h) for d, h in zip(spec.marginals, hs)]
    gram = a @ np.diag([p.value for p in powers]) @ a.T
    # a relative error e in each N_j moves log|A D A^T| by at most e * r
    rel = max(p.error_estimate / p.value for p in powers)
    expected = all(isinstance(d.impl, GaussianND) for d in spec.marginals) or _selection_like(a)
    if form == "gaussian":
        rhs = gaussian_entropy(gram)
        err = himg.error_estimate + 0.5 * r * rel
        return make_report("zf-epi-gaussian", himg.nats, rhs, "ge", err, inputs,
                           reference="linear-transform entropy power inequality, Gaussian-comparison form",
                           method=method, equality_expected=expected)
    pimg = entropy_power(spec.image(), himg)
    rhs = float(np.linalg.det(gram)) ** (1.0 / r)
    err = pimg.error_estimate + rhs * rel
    return make_report("zf-epi-power", pimg.value, rhs, "ge", err, inputs,
                       reference="linear-transform entropy power inequality, power form",
                       method=method, equality_expected=expected)


def check_zf_fii(spec: LinearMixSpec) -> InequalityReport:
    """J(A X) <= sum_ij a_ij^2 J(X_j) for orthonormal rows."""
    _require_orthonormal(spec)
    a = spec.matrix
    js = [fisher_info(d) for d in spec.marginals]
    img = spec.image()
    jimg = fisher_info(img) if spec.rows == 1 else fisher_info(img, abs_tol=QUAD_TOL_2D, rel_tol=QUAD_TOL_2D)
    weights = (a**2).sum(axis=0)
    rhs = float(sum(w * j.scalar for w, j in zip(weights, js)))
    err = jimg.error_estimate + float(sum(w * j.error_estimate for w, j in zip(weights, js)))
    return make_report("zf-fii", jimg.scalar, rhs, "le", err, spec.as_inputs(),
                       reference="linear-transform Fisher information inequality",
                       method=combine_method(jimg.method, *[j.method for j in js]),
                       equality_expected=_equal_gaussians(spec.marginals, a) or _selection_like(a))


def check_zf_mii(spec: LinearMixSpec, z: GaussianND | None = None) -> InequalityReport:
    """I(A X + Z; Z) <= sum_ij a_ij^2 I(X_j + Z; Z) for white Gaussian Z."""
    _require_orthonormal(spec)
    a, r = spec.matrix, spec.rows
    z = z if z is not None else GaussianND(np.zeros(r), np.eye(r))
    zc = z.impl if isinstance(z.impl, GaussianND) else None
    if zc is None or zc.dim != r:
        raise DimensionMismatch("Z must be a Gaussian r-vector")
    var = float(zc.cov[0, 0])
    if not np.allclose(zc.cov, var * np.eye(r), atol=1e-12):
        raise DomainError("Z must be white")
    img = spec.image()
    himg = _image_entropy(spec)
    noisy = convolve_gaussian(img, 1.0, zc.cov)
    hn = entropy(noisy) if r == 1 else entropy(noisy, abs_tol=QUAD_TOL_2D, rel_tol=QUAD_TOL_2D)
    lhs = hn.nats - himg.nats
    err = hn.error_estimate + himg.error_estimate
    methods = [hn.method, himg.method]
    rhs = 0.0
    for w, d in zip((a**2).sum(axis=0), spec.marginals):
        hy = entropy(convolve_gaussian(d, 1.0, [[var]]))
        hx = entropy(d)
        rhs += w * (hy.nats - hx.nats)
        err += w * (hy.error_estimate + hx.error_estimate)
        methods += [hy.method, hx.method]
    return make_report("zf-mii", lhs, rhs, "le", err, {**spec.as_inputs(), "noise": z},
                       reference="linear-transform mutual information inequality",
                       method=combine_method(*methods),
                       equality_expected=_equal_gaussians(spec.marginals, a) or _selection_like(a))


def random_orthonormal_rows(rng: np.random.Generator, r: int, m: int) -> np.ndarray:
    """Haar-distributed r x m matrix with orthonormal rows."""
    q, rr = np.linalg.qr(rng.standard_normal((m, m)))
    q = q * np.sign(np.diag(rr))
    return q[:r]


def zf_gaussian_entropy(spec: LinearMixSpec) -> float:
    """h(A X~) for independent Gaussians X~_j with h(X~_j) = h(X_j)."""
    powers = [entropy_power(d).value for d in spec.marginals]
    return gaussian_entropy(spec.matrix @ np.diag(powers) @ spec.matrix.T)


__all__ = ["LinearMixSpec", "check_zf_epi", "check_zf_fii", "check_zf_mii", "random_orthonormal_rows",
           "zf_gaussian_entropy", "ZF_EPI_FORMS"]
