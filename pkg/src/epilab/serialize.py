"""Canonical JSON form of distributions, and stable digests of check inputs."""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

from .distributions import (
    Cauchy1D,
    Distribution,
    GaussianND,
    GaussianSmoothed,
    IndependentSum,
    Laplace1D,
    LinearImage,
    MixtureND,
    ProductND,
    Uniform1D,
)
from .errors import ConfigError

TYPE_TAGS = ("gaussian", "laplace", "uniform", "cauchy", "mixture", "product",
             "linear_image", "gaussian_smoothed", "independent_sum")


def _vec(a):
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def _mat(a):
    return [[float(v) for v in row] for row in np.atleast_2d(np.asarray(a, dtype=float))]


def to_dict(dist: Distribution) -> dict:
    """Serializable description; inverse of :func:`from_dict`."""
    if isinstance(dist, GaussianND):
        return {"type": "gaussian", "mean": _vec(dist.mean), "cov": _mat(dist.cov)}
    if isinstance(dist, Laplace1D):
        return {"type": "laplace", "loc": float(dist.loc), "scale": float(dist.scale)}
    if isinstance(dist, Uniform1D):
        return {"type": "uniform", "lower": float(dist.lower), "upper": float(dist.upper)}
    if isinstance(dist, Cauchy1D):
        return {"type": "cauchy", "loc": float(dist.loc), "scale": float(dist.scale)}
    if isinstance(dist, MixtureND):
        return {"type": "mixture", "weights": _vec(dist.weights),
                "components": [to_dict(c) for c in dist.components]}
    if isinstance(dist, ProductND):
        return {"type": "product", "marginals": [to_dict(m) for m in dist.marginals]}
    if isinstance(dist, LinearImage):
        return {"type": "linear_image", "matrix": _mat(dist.matrix), "base": to_dict(dist.base)}
    if isinstance(dist, GaussianSmoothed):
        return {"type": "gaussian_smoothed", "base": to_dict(dist.base), "t": float(dist.t),
                "noise_cov": _mat(dist.noise_cov)}
    if isinstance(dist, IndependentSum):
        return {"type": "independent_sum", "coeffs": _vec(dist.coeffs),
                "components": [to_dict(c) for c in dist.components]}
    raise TypeError(f"{type(dist).__name__} has no serialized form")


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"missing field {key!r}", where)
    return obj[key]


def from_dict(obj: Any, where: str = "distribution") -> Distribution:
    """Build a distribution from its serialized form; errors name the offending field."""
    if not isinstance(obj, dict):
        raise ConfigError("a distribution must be a JSON object", where)
    tag = _need(obj, "type", where)
    known = {
        "gaussian": {"type", "mean", "cov"},
        "laplace": {"type", "loc", "scale"},
        "uniform": {"type", "lower", "upper"},
        "cauchy": {"type", "loc", "scale"},
        "mixture": {"type", "weights", "components"},
        "product": {"type", "marginals"},
        "linear_image": {"type", "matrix", "base"},
        "gaussian_smoothed": {"type", "base", "t", "noise_cov"},
        "independent_sum": {"type", "coeffs", "components"},
    }
    if tag not in known:
        raise ConfigError(f"unknown distribution type {tag!r} (expected one of {', '.join(TYPE_TAGS)})", where)
    extra = set(obj) - known[tag]
    if extra:
        raise ConfigError(f"unexpected field(s) {sorted(extra)} for type {tag!r}", where)
    try:
        if tag == "gaussian":
            return GaussianND(_need(obj, "mean", where), _need(obj, "cov", where))
        if tag == "laplace":
            return Laplace1D(float(_need(obj, "loc", where)), float(_need(obj, "scale", where)))
        if tag == "uniform":
            return Uniform1D(float(_need(obj, "lower", where)), float(_need(obj, "upper", where)))
        if tag == "cauchy":
            return Cauchy1D(float(_need(obj, "loc", where)), float(_need(obj, "scale", where)))
        if tag == "mixture":
            comps = [from_dict(c, f"{where}.components[{i}]")
                     for i, c in enumerate(_need(obj, "components", where))]
            return MixtureND(_need(obj, "weights", where), comps)
        if tag == "product":
            margs = [from_dict(m, f"{where}.marginals[{i}]")
                     for i, m in enumerate(_need(obj, "marginals", where))]
            return ProductND(margs)
        if tag == "linear_image":
            return LinearImage(_need(obj, "matrix", where), from_dict(_need(obj, "base", where), f"{where}.base"))
        if tag == "gaussian_smoothed":
            return GaussianSmoothed(from_dict(_need(obj, "base", where), f"{where}.base"),
                                    float(_need(obj, "t", where)), _need(obj, "noise_cov", where))
        comps = [from_dict(c, f"{where}.components[{i}]")
                 for i, c in enumerate(_need(obj, "components", where))]
        return IndependentSum(_need(obj, "coeffs", where), comps)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), where) from exc
    except Exception as exc:  # domain errors raised by the constructors
        raise ConfigError(f"{type(exc).__name__}: {exc}", where) from exc


def _canonical(value):
    if isinstance(value, Distribution):
        return to_dict(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if hasattr(value, "__dataclass_fields__"):
        return {k: _canonical(getattr(value, k)) for k in value.__dataclass_fields__}
    return value


def digest(*inputs) -> str:
    """Short SHA-256 digest of the canonical JSON of the inputs."""
    text = json.dumps(_canonical(list(inputs)), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]
