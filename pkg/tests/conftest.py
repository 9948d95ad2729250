import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from descflow import Problem, make_mesh, smooth_power  # noqa: E402

# filled by test_acceptance, printed at the end of the session
CRITERIA = {}


def record_criterion(number, title, passed, detail):
    CRITERIA[number] = (title, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        title, ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"CRITERION {k} {'PASS' if ok else 'FAIL'}: {title} | {detail}")


@pytest.fixture(scope="session")
def small_mesh():
    return make_mesh(49)


@pytest.fixture(scope="session")
def small_problem(small_mesh):
    # lam = 5 sits below the discrete principal eigenvalue (about 9.83 on this mesh)
    return Problem(small_mesh, 2.0, 5.0, smooth_power())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
