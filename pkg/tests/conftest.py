from __future__ import annotations

import pytest

from atomscreen.radial import SolverConfig, get_solver


@pytest.fixture(scope="session")
def default_solver():
    return get_solver(SolverConfig())


@pytest.fixture(scope="session")
def small_solver():
    # cheap basis for tests that only need qualitative behaviour
    return get_solver(SolverConfig(n_splines=150, r_max=60.0, order=7))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
