import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hilbundle import FibreSpace, Trivializer
from hilbundle.catalog import complex_gaussian, make_trivializer

settings.register_profile(
    "numeric", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("numeric")


def phase_trivializer() -> Trivializer:
    """1-D, n=2: L(x) = diag(1, e^{ix})."""
    space = FibreSpace(2)

    def L(x):
        return np.diag([1.0, np.exp(1j * x[0])])

    def dL(x, mu):
        return np.diag([0.0, 1j * np.exp(1j * x[0])])

    return Trivializer(space, L, dL, name="phase")


@pytest.fixture
def phase_triv():
    return phase_trivializer()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


WEIGHTED_GRAM = np.array([[2.0, 0.5 + 0.2j, 0.0], [0.5 - 0.2j, 1.5, 0.1j], [0.0, -0.1j, 1.0]])


@pytest.fixture
def weighted_space():
    return FibreSpace(3, WEIGHTED_GRAM)


@pytest.fixture
def twisted_triv(weighted_space):
    """2-D exp-generator trivializer with non-commuting generators on a non-Euclidean fibre."""
    return make_trivializer(weighted_space, 2, "exp_generator", {"random": {"seed": 5, "scale": 0.5}})


def random_point(rng, dim, lo=-0.8, hi=0.8):
    return rng.uniform(lo, hi, size=dim)


def cvec(rng, n):
    return complex_gaussian(rng, (n,))


def cmat(rng, n):
    return complex_gaussian(rng, (n, n))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
