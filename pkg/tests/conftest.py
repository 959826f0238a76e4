import numpy as np
import pytest

from logcave.lp_core import SampleSet


@pytest.fixture
def segment():
    return SampleSet([[0.0, 1.0]])


@pytest.fixture
def triangle():
    return SampleSet([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


@pytest.fixture
def square():
    return SampleSet([[0.0, 1.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0]])


def random_sample(rng, n, d):
    """Points in general position, redrawn until they span R^d."""
    while True:
        P = rng.uniform(-1, 1, size=(d, n))
        if np.linalg.matrix_rank(P - P[:, :1]) == d:
            return SampleSet(P)


def random_hull_point(rng, X):
    w = rng.dirichlet(np.ones(X.n))
    return X.points @ w


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def acceptance(pytestconfig):
    """Record one PASS/FAIL line for a numbered criterion and return the flag."""

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        pytestconfig.acceptance_lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
