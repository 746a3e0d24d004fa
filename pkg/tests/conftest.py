import numpy as np
import pytest

from sssf.herglotz import HerglotzTriple
from sssf.measure import make_measure
from sssf.rankone import build_model

ACCEPTANCE_LINES: list[str] = []


def random_positions(rng, n, lo=-5.0, hi=5.0, min_gap=0.05):
    while True:
        d = np.sort(rng.uniform(lo, hi, n))
        if n == 1 or np.min(np.diff(d)) >= min_gap:
            return d


def random_nu(rng, n=None, max_n=30):
    """Atomic measure with the acceptance distribution: n in 1..max_n,
    positions in [-5, 5] separated by >= 0.05, masses in [0.1, 2]."""
    if n is None:
        n = int(rng.integers(1, max_n + 1))
    d = random_positions(rng, n)
    w = rng.uniform(0.1, 2.0, n)
    return make_measure(zip(d, w))


def random_model(rng, n=None, max_n=30):
    return build_model(random_nu(rng, n, max_n))


def random_atomic_triple(rng, max_atoms=8, alpha_zero_prob=0.3):
    k = int(rng.integers(0, max_atoms + 1))
    alpha = 0.0 if (k > 0 and rng.random() < alpha_zero_prob) else float(rng.uniform(0.2, 3.0))
    p = random_positions(rng, k, min_gap=0.1) if k else []
    m = rng.uniform(0.1, 2.0, k)
    return HerglotzTriple(alpha, float(rng.uniform(-2, 2)), make_measure(zip(p, m)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def h_z():
    return HerglotzTriple(1.0, 0.0)


@pytest.fixture
def h_z_minus_inv():
    """h(z) = z - 1/z."""
    return HerglotzTriple(1.0, 0.0, make_measure([(0.0, 1.0)]))


@pytest.fixture
def h_minus_inv():
    """h(z) = -1/z."""
    return HerglotzTriple(0.0, 0.0, make_measure([(0.0, 1.0)]))


@pytest.fixture
def two_atom_nu():
    return make_measure([(-1.0, 0.5), (1.0, 0.5)])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
