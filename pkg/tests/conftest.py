import numpy as np
import pytest

from walksolve.core import SparseSystem

# Roster lines collected by test_acceptance; replayed after the run so
# the per-criterion verdicts survive output capture.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance roster")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def two_node():
    # A = [[2, -1], [-0.5, 2]], b = [2, 4]; solution worked out by hand:
    # det = 3.5, x = [ (2*2 + 1*4)/3.5, (0.5*2 + 2*4)/3.5 ] = [16/7, 18/7]
    entries = [(0, 0, 2.0), (0, 1, -1.0), (1, 0, -0.5), (1, 1, 2.0)]
    return SparseSystem(2, entries, [2.0, 4.0])


@pytest.fixture
def path3():
    # A = [[2,-1,0],[-1,2,-1],[0,-1,2]], b = [1,2,3]; elimination by hand
    # gives x = [2.5, 4, 3.5]
    entries = [(0, 0, 2.0), (0, 1, -1.0),
               (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0),
               (2, 1, -1.0), (2, 2, 2.0)]
    return SparseSystem(3, entries, [1.0, 2.0, 3.0])


TWO_NODE_SOLUTION = np.array([16.0 / 7.0, 18.0 / 7.0])
PATH3_SOLUTION = np.array([2.5, 4.0, 3.5])
