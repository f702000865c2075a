import numpy as np
import pytest

from rgm.graph import ReciprocalGraph

ACCEPTANCE_RESULTS = []


def record_criterion(number, name, passed, detail=""):
    ACCEPTANCE_RESULTS.append((number, name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {name} {detail}")


# Four-vertex examples: 1, 2 are gene expressions, 3, 4 their DNA-level measurements.
EXAMPLE_GRAPHS = {
    "a": ReciprocalGraph(4, {(1, 2), (2, 1), (3, 1), (4, 2)}),
    "b": ReciprocalGraph(4, {(3, 1), (1, 2), (4, 2)}),
    "c": ReciprocalGraph(4, {(3, 1), (2, 1), (4, 2)}),
    "d": ReciprocalGraph(4, {(3, 1), (4, 2)}, {(1, 2)}),
    "e": ReciprocalGraph(2, {(1, 2)}),
    "f": ReciprocalGraph(2, {(2, 1)}),
    "g": ReciprocalGraph(2, set(), {(1, 2)}),
    "h": ReciprocalGraph(2, {(1, 2), (2, 1)}),
}


@pytest.fixture
def example_graphs():
    return EXAMPLE_GRAPHS


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
