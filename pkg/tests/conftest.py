import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from epilab.distributions import GaussianND, GaussianSmoothed, Laplace1D, MixtureND, Uniform1D

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=15, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

UNIT_LAPLACE = 2**-0.5


def gauss(var=1.0, mean=0.0):
    return GaussianND([mean], [[var]])


def laplace(scale=UNIT_LAPLACE, loc=0.0):
    return Laplace1D(loc, scale)


def mixture():
    return MixtureND([0.5, 0.5], [gauss(1.0, -2.0), gauss(1.0, 2.0)])


def smoothed_uniform(t=1.0):
    return GaussianSmoothed(Uniform1D(0.0, 1.0), t, [[1.0]])


TEST_SET = {"gaussian": gauss, "laplace": laplace, "mixture": mixture}


@pytest.fixture(params=sorted(TEST_SET))
def test_dist(request):
    return TEST_SET[request.param]()


# strategies over the supported scalar families
variances = st.floats(0.3, 3.0)
locs = st.floats(-1.0, 1.0)


@st.composite
def scalar_laws(draw, smooth=True):
    kind = draw(st.sampled_from(["gaussian", "laplace", "mixture", "smoothed-uniform"]))
    if kind == "gaussian":
        return gauss(draw(variances), draw(locs))
    if kind == "laplace":
        return laplace(math.sqrt(draw(variances) / 2), draw(locs))
    if kind == "mixture":
        w = draw(st.floats(0.2, 0.8))
        sep = draw(st.floats(0.5, 2.5))
        return MixtureND([w, 1 - w], [gauss(draw(st.floats(0.4, 1.5)), -sep), gauss(draw(st.floats(0.4, 1.5)), sep)])
    width = draw(st.floats(0.5, 3.0))
    return GaussianSmoothed(Uniform1D(-width / 2, width / 2), draw(st.floats(0.2, 1.0)), [[1.0]])


coefficient_pairs = st.tuples(st.floats(-2, 2), st.floats(-2, 2)).filter(lambda a: abs(a[0]) + abs(a[1]) > 0.1)


def near(a, b, tol):
    return abs(float(a) - float(b)) <= tol


def np_close(a, b, tol):
    return float(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float)))) <= tol


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
