"""Shared fixtures plus a terminal summary that prints one line per
acceptance criterion."""

import re

import numpy as np
import pytest

from orbitkit.catalog import commuting_constants, grushin, heisenberg
from orbitkit.fields import estimate_lb_bound
from orbitkit.space import ball

_ACCEPTANCE_RESULTS: dict[str, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def heis():
    return heisenberg(radius=8.0)


@pytest.fixture(scope="session")
def heis_lb(heis):
    return estimate_lb_bound(heis, ball([0, 0, 0], 8.0), 2, 50)


@pytest.fixture(scope="session")
def grush():
    return grushin(radius=4.0)


@pytest.fixture(scope="session")
def grush_lb(grush):
    return estimate_lb_bound(grush, ball([0, 0], 4.0), 2, 50)


@pytest.fixture(scope="session")
def commuting3():
    return commuting_constants(3, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def pytest_runtest_logreport(report):
    m = re.match(r".*test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if m and report.when == "call":
        num, name = m.group(1), m.group(2).replace("_", " ")
        _ACCEPTANCE_RESULTS[num] = ("PASS" if report.passed else "FAIL", name)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(_ACCEPTANCE_RESULTS, key=int):
        status, name = _ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"criterion {int(num):2d} [{status}] {name}")
