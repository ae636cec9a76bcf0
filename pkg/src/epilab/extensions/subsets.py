"""Entropy inequalities over balanced subset collections, and for gas mixtures."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from ..channel import NOISE_SCALED, ChannelSpec, mmse
from ..distributions import Distribution, GaussianND, MixtureND, convolve_gaussian, linear_combination
from ..errors import DimensionMismatch, DomainError, UnsupportedConvolution
from ..functionals import entropy, entropy_power, fisher_info
from ..inequalities import InequalityReport, gaussian_equality_case, make_report
from ..numerics import combine_method
from ..serialize import digest

SUBSET_FORMS = ("concavity", "power", "fii", "mii")
MAX_NON_GAUSSIAN = 3


def balance(subsets: Iterable[Iterable[int]], count: int) -> tuple[list[tuple[int, ...]], int]:
    """Add singletons in index order until every index appears max-count times."""
    coll = [tuple(sorted(set(int(i) for i in s))) for s in subsets]
    if any(not s for s in coll):
        raise DomainError("subsets must be nonempty")
    if any(i < 0 or i >= count for s in coll for i in s):
        raise DomainError("subset index out of range")
    hits = np.zeros(count, dtype=int)
    for s in coll:
        hits[list(s)] += 1
    k = int(hits.max()) if coll else 1
    for i in range(count):
        coll.extend([(i,)] * int(k - hits[i]))
    return coll, k


def leave_one_out(count: int) -> list[tuple[int, ...]]:
    return [tuple(j for j in range(count) if j != i) for i in range(count)]


def _sub_sum(a, dists, s):
    idx = [i for i in s if a[i] != 0]
    weight = float(sum(a[i] ** 2 for i in idx))
    if weight == 0:
        return None, 0.0
    nong = sum(not isinstance(dists[i].impl, GaussianND) for i in idx)
    if nong > MAX_NON_GAUSSIAN:
        raise UnsupportedConvolution(f"{nong} non-Gaussian summands exceed the supported {MAX_NON_GAUSSIAN}")
    return linear_combination([a[i] / math.sqrt(weight) for i in idx], [dists[i] for i in idx]), weight


def check_subset_epi(dists: Sequence[Distribution], coeffs, subsets, form: str = "concavity",
                     noise: GaussianND | None = None) -> InequalityReport:
    """Balanced-subset inequalities for h, N, J and I(. + Z; Z).

    concavity: h(sum a_i X_i) >= sum_S a_S^2 h(X_S) with a_S^2 = sum_{i in S} a_i^2 / k
    and X_S the normalized sub-sum; power: N(sum a_i X_i) >= (1/k) sum_S N(sum_{i in S} a_i X_i).
    """
    if form not in SUBSET_FORMS:
        raise ValueError(f"form must be one of {SUBSET_FORMS}")
    dists = list(dists)
    if any(d.dim != 1 for d in dists):
        raise DimensionMismatch("subset inequalities are implemented for scalar variables")
    a = np.asarray(coeffs, dtype=float).ravel()
    if a.size != len(dists):
        raise DimensionMismatch("one coefficient per distribution is required")
    a = a / np.linalg.norm(a)
    coll, k = balance(subsets, len(dists))
    total, _ = _sub_sum(a, dists, range(len(dists)))
    parts = []
    for s in coll:
        xs, w = _sub_sum(a, dists, s)
        if xs is not None:
            parts.append((s, xs, w / k))
    inputs = {"dists": dists, "coeffs": a, "subsets": coll, "form": form}
    live = [d for d, c in zip(dists, a) if c != 0]
    full = all(set(i for i in range(len(a)) if a[i] != 0) <= set(s) for s, _, _ in parts)
    if form == "power":
        ht = entropy(total)
        pt = entropy_power(total, ht)
        rhs, err, methods = 0.0, pt.error_estimate, [ht.method]
        for s, xs, w in parts:
            # N(sum_{i in S} a_i X_i) = (sum_{i in S} a_i^2) N(X_S)
            p = entropy_power(xs)
            rhs += w * p.value
            err += w * p.error_estimate
            methods.append(p.method)
        expected = all(isinstance(d.impl, GaussianND) for d in live) or full
        return make_report("subset-epi-power", pt.value, rhs, "ge", err, inputs,
                           reference="subset entropy power inequality, power form",
                           method=combine_method(*methods), equality_expected=expected,
                           details={"k": k, "collection": coll})
    expected = gaussian_equality_case(live, "identical") or full
    if form == "concavity":
        vals = [entropy(total)] + [entropy(xs) for _, xs, _ in parts]
        rhs = sum(w * v.nats for (_, _, w), v in zip(parts, vals[1:]))
        err = vals[0].error_estimate + sum(w * v.error_estimate for (_, _, w), v in zip(parts, vals[1:]))
        return make_report("subset-epi-concavity", vals[0].nats, rhs, "ge", err, inputs,
                           reference="subset entropy power inequality, concavity form",
                           method=combine_method(*[v.method for v in vals]), equality_expected=expected,
                           details={"k": k, "collection": coll})
    if form == "fii":
        vals = [fisher_info(total)] + [fisher_info(xs) for _, xs, _ in parts]
        rhs = sum(w * v.scalar for (_, _, w), v in zip(parts, vals[1:]))
        err = vals[0].error_estimate + sum(w * v.error_estimate for (_, _, w), v in zip(parts, vals[1:]))
        return make_report("subset-fii", vals[0].scalar, rhs, "le", err, inputs,
                           reference="subset Fisher information inequality",
                           method=combine_method(*[v.method for v in vals]), equality_expected=expected,
                           details={"k": k, "collection": coll})
    z = noise if noise is not None else GaussianND([0.0], [[1.0]])
    var = z.impl.cov

    def mi(d):
        hy, hx = entropy(convolve_gaussian(d, 1.0, var)), entropy(d)
        return hy.nats - hx.nats, hy.error_estimate + hx.error_estimate, combine_method(hy.method, hx.method)

    lhs, err, m0 = mi(total)
    rhs, methods = 0.0, [m0]
    for _, xs, w in parts:
        v, e, m = mi(xs)
        rhs += w * v
        err += w * e
        methods.append(m)
    return make_report("subset-mii", lhs, rhs, "le", err, {**inputs, "noise": z},
                       reference="subset mutual information inequality", method=combine_method(*methods),
                       equality_expected=expected, details={"k": k, "collection": coll})


def check_gas_mixture(weights, dists: Sequence[Distribution], z: GaussianND | None = None) -> list[InequalityReport]:
    """Convexity inequalities for X_I with P(I = i) = weights[i]: J, MMSE, h and I(. + Z; Z)."""
    dists = list(dists)
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != len(dists) or np.any(w < 0) or w.sum() <= 0:
        raise DomainError("weights must be nonnegative, one per component")
    w = w / w.sum()
    n = dists[0].dim
    z = z if z is not None else GaussianND(np.zeros(n), np.eye(n))
    zc = z.impl
    var = float(zc.cov[0, 0])
    if not np.allclose(zc.cov, var * np.eye(n), atol=1e-12):
        raise DomainError("Z must be white Gaussian")
    mix = MixtureND(w, dists)
    inputs = {"weights": w, "dists": dists, "noise": z}
    same = len({digest(d) for d, wi in zip(dists, w) if wi > 0}) == 1
    live = [(wi, d) for wi, d in zip(w, dists) if wi > 0]
    reports = []

    jm = fisher_info(mix)
    js = [fisher_info(d) for _, d in live]
    reports.append(make_report(
        "gas-fii", jm.scalar, sum(wi * j.scalar for (wi, _), j in zip(live, js)), "le",
        jm.error_estimate + sum(wi * j.error_estimate for (wi, _), j in zip(live, js)), inputs,
        reference="convexity of Fisher information over mixtures",
        method=combine_method(jm.method, *[j.method for j in js]), equality_expected=same))

    def channel(d):
        return ChannelSpec(d, GaussianND(np.zeros(n), zc.cov), NOISE_SCALED, 1.0)
    mm = mmse(channel(mix))
    ms = [mmse(channel(d)) for _, d in live]
    reports.append(make_report(
        "gas-mmse", mm.value, sum(wi * m.value for (wi, _), m in zip(live, ms)), "ge",
        mm.error_estimate + sum(wi * m.error_estimate for (wi, _), m in zip(live, ms)), inputs,
        reference="concavity of the MMSE over mixtures",
        method=combine_method(mm.method, *[m.method for m in ms]), equality_expected=same))

    hm = entropy(mix)
    hs = [entropy(d) for _, d in live]
    reports.append(make_report(
        "gas-entropy", hm.nats, sum(wi * h.nats for (wi, _), h in zip(live, hs)), "ge",
        hm.error_estimate + sum(wi * h.error_estimate for (wi, _), h in zip(live, hs)), inputs,
        reference="concavity of entropy over mixtures",
        method=combine_method(hm.method, *[h.method for h in hs]), equality_expected=same))

    def mi(d, h):
        hy = entropy(convolve_gaussian(d, 1.0, zc.cov))
        return hy.nats - h.nats, hy.error_estimate + h.error_estimate
    im, ie = mi(mix, hm)
    parts = [mi(d, h) for (_, d), h in zip(live, hs)]
    reports.append(make_report(
        "gas-mii", im, sum(wi * v for (wi, _), (v, _) in zip(live, parts)), "le",
        ie + sum(wi * e for (wi, _), (_, e) in zip(live, parts)), inputs,
        reference="convexity of mutual information over mixtures", method=hm.method, equality_expected=same))
    return reports


__all__ = ["SUBSET_FORMS", "balance", "leave_one_out", "check_subset_epi", "check_gas_mixture"]
