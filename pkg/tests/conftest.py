import numpy as np
import pytest

from bcs_tc.potentials import Potential

#: lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def tabulated_attractive() -> Potential:
    r = np.linspace(0.05, 4.0, 80)
    return Potential.tabulated(r, -1.5 * np.exp(-r**2) * (1 + 0.3 * r))


def tabulated_sign_changing() -> Potential:
    r = np.linspace(0.05, 4.0, 80)
    return Potential.tabulated(r, -2.0 * np.exp(-r**2) + 0.6 * np.exp(-2 * (r - 1.5) ** 2))


@pytest.fixture(scope="session")
def well():
    return Potential.square_well(1.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
