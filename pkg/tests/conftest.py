import numpy as np
import pytest
from hypothesis import settings

from alaamsim.graph import from_edge_list
from alaamsim.model import AttributeTable

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


def random_graph(n, p, rng):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return from_edge_list(pairs, n)


def random_attrs(n, rng, outcome=None):
    u = rng.integers(0, 2, n).astype(np.int8)
    v = rng.standard_normal(n)
    y = rng.integers(0, 2, n).astype(np.int8) if outcome is None else outcome
    return AttributeTable(u, v, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def k3():
    return from_edge_list([(0, 1), (0, 2), (1, 2)], 3)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def report_criterion(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
