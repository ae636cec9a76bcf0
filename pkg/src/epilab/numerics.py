"""Shared numerical engine: adaptive quadrature, finite differences, Monte Carlo.

Integrands are vectorized: a one-dimensional integrand maps an array of
abscissae of shape ``(k,)`` to values of shape ``(..., k)``, so that several
related integrals (for instance the moments of a posterior) are computed on
one set of nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalFailure

METHODS = ("quadrature", "monte-carlo", "closed-form")
# nodes evaluated per call of the integrand in segmented quadrature (bounds memory)
CHUNK_NODES = 1 << 19


@dataclass(frozen=True)
class NumericResult:
    value: object
    error_estimate: float = 0.0
    method: str = "closed-form"
    note: str = ""

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        err = float(self.error_estimate)
        if not err >= 0.0:
            raise ValueError("error_estimate must be a nonnegative number")
        if self.method == "closed-form" and err != 0.0:
            raise ValueError("closed-form results carry no error")
        object.__setattr__(self, "error_estimate", err)

    def __float__(self):
        return float(self.value)


def combine_method(*methods: str) -> str:
    """Weakest method tag among the inputs of a derived quantity."""
    if "monte-carlo" in methods:
        return "monte-carlo"
    if "quadrature" in methods:
        return "quadrature"
    return "closed-form"


# Gauss-Kronrod 7/15 rule on [-1, 1].
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
GK_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
GK_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GK_GAUSS_WEIGHTS = np.zeros(15)
GK_GAUSS_WEIGHTS[1:7:2] = _WG[:3]
GK_GAUSS_WEIGHTS[7] = _WG[3]
GK_GAUSS_WEIGHTS[9:15:2] = _WG[2::-1]

_EPS = np.finfo(float).eps


def _initial_edges(lo, hi, points, initial):
    pts = [float(p) for p in points if lo < p < hi]
    knots = np.unique(np.array([lo, *pts, hi], dtype=float))
    edges = []
    for a, b in zip(knots[:-1], knots[1:]):
        edges.extend(np.linspace(a, b, initial + 1)[:-1])
    edges.append(hi)
    edges = np.asarray(edges)
    return edges[:-1], edges[1:]


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    points: Sequence[float] = (),
    *,
    abs_tol: float = 1e-11,
    rel_tol: float = 1e-10,
    initial: int = 2,
    max_panels: int = 20000,
) -> NumericResult:
    """Adaptive Gauss-Kronrod 7/15 quadrature of a vectorized integrand.

    ``points`` are interior breakpoints (kinks, jumps, peaks) used as initial
    panel edges.  The error estimate is the summed |K15 - G7| gap over the
    accepted panels, taking the max over leading output dimensions.
    """
    lo, hi = float(lo), float(hi)
    if hi <= lo:
        probe = np.asarray(f(np.array([lo])))
        return NumericResult(np.zeros(probe.shape[:-1]) if probe.ndim > 1 else 0.0, 0.0, "quadrature")
    a, b = _initial_edges(lo, hi, points, initial)
    span = hi - lo
    total = None
    total_err = 0.0
    evaluated = 0
    while True:
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        x = (mid[:, None] + half[:, None] * GK_NODES[None, :]).ravel()
        vals = np.asarray(f(x), dtype=float)
        lead = vals.shape[:-1]
        vals = vals.reshape(lead + (a.size, 15))
        kron = (vals * GK_WEIGHTS).sum(-1) * half
        gauss = (vals * GK_GAUSS_WEIGHTS).sum(-1) * half
        absk = (np.abs(vals) * GK_WEIGHTS).sum(-1) * half
        err = np.abs(kron - gauss)
        absk = absk.reshape(-1, a.size).max(0)
        err = err.reshape(-1, a.size).max(0)
        if not np.all(np.isfinite(kron)):
            raise NumericalFailure("integrand produced non-finite values")
        evaluated += a.size
        if total is None:
            total = np.zeros(lead)
        est = total + kron.sum(-1)
        scale = float(np.max(np.abs(est))) if np.size(est) else 0.0
        tol = max(abs_tol, rel_tol * scale)
        if total_err + err.sum() <= tol:
            return NumericResult(_squeeze(est), total_err + float(err.sum()), "quadrature")
        width = b - a
        accept = (err <= 0.5 * tol * width / span) | (err <= 50 * _EPS * absk) | (width <= span * 1e-12)
        total = total + kron[..., accept].sum(-1)
        total_err += float(err[accept].sum())
        if accept.all():
            return NumericResult(_squeeze(total), total_err, "quadrature")
        ra, rb = a[~accept], b[~accept]
        rm = 0.5 * (ra + rb)
        a = np.concatenate([ra, rm])
        b = np.concatenate([rm, rb])
        order = np.argsort(a)
        a, b = a[order], b[order]
        if evaluated + a.size > max_panels:
            raise NumericalFailure(
                f"adaptive quadrature on [{lo:g}, {hi:g}] exceeded {max_panels} panels "
                f"(error {total_err + err.sum():.3g} vs tolerance {tol:.3g})"
            )


def _squeeze(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def integrate_box(
    f: Callable[[np.ndarray], np.ndarray],
    lo: Sequence[float],
    hi: Sequence[float],
    points: Sequence[Sequence[float]] | None = None,
    *,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-9,
    max_panels: int = 20000,
) -> NumericResult:
    """Nested (tensorized) adaptive quadrature over a box in n <= 3 dimensions.

    ``f`` maps points of shape ``(k, n)`` to values of shape ``(..., k)``.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    n = lo.size
    if n > 3:
        raise NumericalFailure("tensorized quadrature is limited to n <= 3")
    points = points if points is not None else [()] * n
    widths = hi - lo
    inner_err = [0.0]

    def level(d):
        if d == n - 1:
            def g(prefix, xs):
                k = prefix.shape[0]
                grid = np.concatenate(
                    [np.repeat(prefix, xs.size, axis=0), np.tile(xs, k)[:, None]], axis=1
                )
                out = np.asarray(f(grid))
                return out.reshape(out.shape[:-1] + (k, xs.size))
            return g
        deeper = level(d + 1)
        atol = abs_tol / float(np.prod(widths[: d + 1]))

        def g(prefix, xs):
            k = prefix.shape[0]
            pre = np.concatenate(
                [np.repeat(prefix, xs.size, axis=0), np.tile(xs, k)[:, None]], axis=1
            )
            res = integrate(
                lambda ys: deeper(pre, ys), lo[d + 1], hi[d + 1], points[d + 1],
                abs_tol=atol, rel_tol=rel_tol, max_panels=max_panels,
            )
            inner_err[0] = max(inner_err[0], res.error_estimate)
            v = np.asarray(res.value)
            if v.ndim == 0:
                v = v.reshape(1)
            return v.reshape(v.shape[:-1] + (k, xs.size))
        return g

    top = level(0)
    empty = np.zeros((1, 0))

    def outer(xs):
        v = top(empty, xs)
        return v.reshape(v.shape[:-2] + (xs.size,))

    res = integrate(outer, lo[0], hi[0], points[0], abs_tol=abs_tol, rel_tol=rel_tol,
                    max_panels=max_panels)
    err = res.error_estimate + inner_err[0] * float(np.prod(widths[:1]))
    return NumericResult(res.value, err, "quadrature")


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def segmented_quadrature(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    edges: np.ndarray,
    *,
    order: int = 10,
    panels: int = 2,
    rel_tol: float = 1e-11,
    abs_tol: float = 1e-300,
    max_panels: int = 512,
) -> tuple[np.ndarray, float]:
    """Row-wise composite Gauss-Legendre integrals with per-row breakpoints.

    ``edges`` has shape ``(k, m)`` and is sorted along each row; row ``i`` is
    integrated from ``edges[i, 0]`` to ``edges[i, -1]`` with every segment
    split into ``panels`` equal pieces.  ``f(x, rows)`` receives nodes of shape
    ``(len(rows), N)`` for the listed rows.  Panels double for the rows whose
    successive results still disagree; the largest last gap is returned as
    the error estimate.
    """
    edges = np.asarray(edges, dtype=float)
    k = edges.shape[0]
    xg, wg = gauss_legendre(order)

    def rule_chunk(p, rows):
        seg_lo = edges[rows, :-1]
        seg_w = np.diff(edges[rows], axis=1)
        j = np.arange(p)
        local = (j[:, None] + 0.5 * (xg[None, :] + 1.0)) / p
        x = seg_lo[:, :, None, None] + seg_w[:, :, None, None] * local[None, None]
        w = (seg_w[:, :, None, None] / p) * (0.5 * wg)[None, None, None, :]
        w = np.broadcast_to(w, x.shape)
        vals = np.asarray(f(x.reshape(rows.size, -1), rows), dtype=float)
        return (vals * w.reshape(rows.size, -1)).sum(-1)

    def rule(p, rows):
        step = max(1, CHUNK_NODES // ((edges.shape[1] - 1) * p * order))
        if rows.size <= step:
            return rule_chunk(p, rows)
        return np.concatenate([rule_chunk(p, rows[i:i + step]) for i in range(0, rows.size, step)], axis=-1)

    rows = np.arange(k)
    cur = rule(panels, rows)
    if k == 0:
        return cur, 0.0
    prev = cur.copy()
    gaps = np.full(k, np.inf)
    p = panels
    while True:
        p *= 2
        new = rule(p, rows)
        gaps[rows] = np.abs(new - prev[..., rows]).reshape(-1, rows.size).max(0)
        cur[..., rows] = new
        scale = float(np.max(np.abs(cur)))
        tol = max(abs_tol, rel_tol * scale)
        if np.all(gaps <= tol):
            return cur, float(gaps.max())
        if p >= max_panels:
            raise NumericalFailure(
                f"segmented quadrature did not settle (gap {gaps.max():.3g}, scale {scale:.3g})"
            )
        rows = np.flatnonzero(gaps > tol)
        prev[..., rows] = cur[..., rows]


def richardson(values: Sequence[float], ratio: float, exponents: Sequence[float]) -> tuple[float, float]:
    """Eliminate error terms h**p for p in ``exponents``.

    ``values[j]`` is the raw estimate at step ``h / ratio**j``; there must be
    ``len(exponents) + 1`` of them.  Returns the extrapolated value and the
    gap to the best estimate one level down.
    """
    table = [list(map(float, values))]
    for p in exponents:
        last = table[-1]
        fac = ratio ** p
        table.append([(fac * last[j + 1] - last[j]) / (fac - 1.0) for j in range(len(last) - 1)])
    best = table[-1][0]
    prev = table[-2][-1]
    return best, abs(best - prev)


def finite_difference(
    f: Callable[[float], float],
    t0: float,
    order: int = 1,
    *,
    step: float | None = None,
    one_sided: bool | None = None,
    exponents: Sequence[float] | None = None,
    tol: float | None = None,
) -> NumericResult:
    """Numerical derivative of a scalar function with Richardson refinement.

    Central differences are used in the interior and forward differences at
    ``t0 == 0`` (or when ``one_sided``).  ``exponents`` lists the error-term
    powers removed by extrapolation; the default removes the leading term
    once.  Functions with fractional-power expansions at a boundary can pass
    for instance ``(0.5, 1.0, 1.5)``.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    h = step if step is not None else max(1e-3, 1e-2 * abs(t0))
    forward = (t0 == 0.0) if one_sided is None else one_sided
    if exponents is None:
        exponents = (1.0,) if forward else (2.0,)
    cache: dict[float, float] = {}

    def F(t):
        if t not in cache:
            cache[t] = float(f(t))
        return cache[t]

    def raw(hh):
        if forward:
            if order == 1:
                return (-3 * F(t0) + 4 * F(t0 + hh) - F(t0 + 2 * hh)) / (2 * hh)
            return (2 * F(t0) - 5 * F(t0 + hh) + 4 * F(t0 + 2 * hh) - F(t0 + 3 * hh)) / hh**2
        if order == 1:
            return (F(t0 + hh) - F(t0 - hh)) / (2 * hh)
        return (F(t0 + hh) - 2 * F(t0) + F(t0 - hh)) / hh**2

    if forward:
        exponents = tuple(e + 1.0 for e in exponents) if exponents == (1.0,) else tuple(exponents)
    levels = [raw(h / 2**j) for j in range(len(exponents) + 1)]
    value, gap = richardson(levels, 2.0, exponents)
    if tol is not None and gap > 10 * tol:
        raise NumericalFailure(f"finite difference refinement gap {gap:.3g} exceeds 10x tolerance")
    return NumericResult(value, gap, "quadrature", note="finite-difference")


def make_rng(seed: int) -> np.random.Generator:
    if not 0 <= int(seed) < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def monte_carlo_mean(values: np.ndarray, antithetic: np.ndarray | None = None) -> NumericResult:
    """Sample mean with a one-standard-error estimate.

    With ``antithetic`` given, pairs (values[i], antithetic[i]) are averaged
    first so that the standard error accounts for their correlation.
    """
    v = np.asarray(values, dtype=float)
    if antithetic is not None:
        v = 0.5 * (v + np.asarray(antithetic, dtype=float))
    if v.size < 2:
        raise NumericalFailure("Monte Carlo needs at least two samples")
    return NumericResult(float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size)), "monte-carlo")
