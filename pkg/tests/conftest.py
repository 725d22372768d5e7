import numpy as np
import pytest

from digicopy.panel import make_panel

# (1,2,3), (3,2,1), (1,3,2): the three-column hand-oracle window
HAND_COLUMNS = np.array([[1.0, 3.0, 1.0], [2.0, 2.0, 3.0], [3.0, 1.0, 2.0]])
HAND_R = np.array([[1.0, -1.0, 0.5], [-1.0, 1.0, -0.5], [0.5, -0.5, 1.0]])
HAND_G = np.array([2.5, 2.5, 2.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20201016)


def random_panel(rng, T, n, scale=1.0):
    return make_panel(rng.normal(size=(T, n)) * scale)


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {number} failed: {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
