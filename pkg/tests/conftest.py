import numpy as np
import pytest

from salloss.core import FixationSet


def random_fixations(rng, shape, count):
    h, w = shape
    idx = rng.choice(h * w, size=count, replace=False)
    return FixationSet(tuple((int(i % w), int(i // w)) for i in idx), (w, h))


def random_pair(rng, shape=(8, 8), lo=0.05, hi=0.95):
    return rng.uniform(lo, hi, shape), rng.uniform(lo, hi, shape)


def random_distribution(rng, shape=(8, 8), lo=0.01):
    m = rng.uniform(lo, 1.0, shape)
    return m / m.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
