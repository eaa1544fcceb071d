from __future__ import annotations

import pytest

from hjselect.flux import build_paper_flux, quadratic_flux
from hjselect.front_tracking import build_counterexample


@pytest.fixture(scope="session")
def paper_flux():
    return build_paper_flux()


@pytest.fixture(scope="session")
def quad_flux():
    return quadratic_flux()


@pytest.fixture(scope="session")
def paper_solution():
    """Paper-mode construction through t3 + 2 at the default step."""
    return build_counterexample(dt=1e-3, mode="paper")


@pytest.fixture(scope="session")
def detect_solution_short():
    """Detect-mode construction over the early window used by the flow tests."""
    return build_counterexample(dt=1e-3, mode="detect", t_end=0.6)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
