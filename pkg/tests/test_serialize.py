import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import gauss, laplace, mixture, scalar_laws
from epilab.distributions import (Cauchy1D, GaussianND, GaussianSmoothed, IndependentSum, LinearImage,
                                  ProductND, Uniform1D)
from epilab.errors import ConfigError
from epilab.serialize import digest, from_dict, to_dict

EXTRA = [
    lambda: Cauchy1D(0.5, 2.0),
    lambda: Uniform1D(-1.0, 3.0),
    lambda: ProductND([laplace(), mixture()]),
    lambda: LinearImage([[1.0, 2.0], [0.0, 1.0]], ProductND([laplace(), gauss()])),
    lambda: GaussianSmoothed(ProductND([laplace(), gauss()]), 0.5, np.eye(2)),
    lambda: IndependentSum([0.6, 0.8], [laplace(), Uniform1D(0, 1)]),
    lambda: GaussianND([1.0, -1.0], [[2.0, 0.3], [0.3, 1.0]]),
]


def _probe(d, rng):
    return rng.uniform(-3, 3, (10, d.dim))


def _round_trip_ok(d):
    back = from_dict(to_dict(d))
    pts = _probe(d, np.random.default_rng(0))
    return np.max(np.abs(d.pdf(pts) - back.pdf(pts))) <= 1e-12


@given(law=scalar_laws())
def test_round_trip_scalar(law):
    assert _round_trip_ok(law)


@pytest.mark.parametrize("make", EXTRA)
def test_round_trip_structured(make):
    assert _round_trip_ok(make())


def test_round_trip_is_stable():
    d = ProductND([laplace(), mixture()])
    assert to_dict(from_dict(to_dict(d))) == to_dict(d)


@pytest.mark.parametrize("obj,fragment", [
    ({"type": "gamma"}, "unknown distribution type"),
    ({"type": "laplace", "loc": 0.0}, "missing field 'scale'"),
    ({"type": "laplace", "loc": 0.0, "scale": -1.0}, "distribution"),
    ({"type": "gaussian", "mean": [0], "cov": [[1]], "extra": 1}, "unexpected field"),
    ([1, 2], "JSON object"),
])
def test_errors_name_the_problem(obj, fragment):
    with pytest.raises(ConfigError) as exc:
        from_dict(obj)
    assert fragment in str(exc.value)


def test_nested_error_path():
    with pytest.raises(ConfigError) as exc:
        from_dict({"type": "mixture", "weights": [1.0], "components": [{"type": "laplace", "loc": 0}]})
    assert "components[0]" in str(exc.value)


def test_digest_depends_on_content():
    assert digest(laplace()) == digest(laplace())
    assert digest(laplace()) != digest(laplace(1.0))
