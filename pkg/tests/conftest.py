import numpy as np
import pytest

from cohesive1d import FamilyA, FamilyB, tabulate_law, default_s_grid


@pytest.fixture(scope="session")
def model_a():
    return FamilyA(1.0)


@pytest.fixture(scope="session")
def model_b():
    return FamilyB(1.5, 2.8)


@pytest.fixture(scope="session")
def law_a(model_a):
    return tabulate_law(model_a, default_s_grid(4.0))


@pytest.fixture(scope="session")
def law_b(model_b):
    return tabulate_law(model_b, default_s_grid(4.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria record their outcome here; the summary prints one line each
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
