import pytest

from pencil_spectra import catalog
from pencil_spectra.rootfind import solve_spectrum


@pytest.fixture(scope="session")
def missile_k12():
    return solve_spectrum(catalog.missile(), 12)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.LINES:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.LINES:
            terminalreporter.write_line(line)
