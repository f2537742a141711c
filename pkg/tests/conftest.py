import numpy as np
import pytest

from sabrashell import ShellParams


@pytest.fixture
def params6():
    return ShellParams(n_shells=6, nu=0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state_pair(rng, n):
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n),
            rng.standard_normal(n) + 1j * rng.standard_normal(n))


def random_control(rng, m, n, scale=1.0):
    return scale * (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
