"""Shared fixtures and the acceptance-summary hook."""

import numpy as np
import pytest

from mskinet.grid import VelocityGrid, SphereQuadrature
from mskinet.species import SpeciesSet, make_kernel


_CRITERIA: list = []


def record_criterion(number: int, title: str, passed: bool, detail: str):
    """Collect one acceptance-criterion verdict for the terminal summary."""
    _CRITERIA.append((number, title, bool(passed), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_CRITERIA):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"criterion {number:2d} {verdict}  {title}: {detail}")


@pytest.fixture(scope="session")
def grid12():
    return VelocityGrid(2, 12, 5.0)


@pytest.fixture(scope="session")
def squad8():
    return SphereQuadrature(2, 8)


@pytest.fixture(scope="session")
def mixed_species():
    return SpeciesSet.create([1.0, 1.5], [0, -1])


@pytest.fixture(scope="session")
def classical_pair():
    return SpeciesSet.create([1.0, 1.5], [0, 0])


@pytest.fixture(scope="session")
def maxwell_kernel():
    return make_kernel("maxwell", c=1.0, b_const=1.0 / (2.0 * np.pi))


@pytest.fixture(scope="session")
def gaussian_pair(grid12, mixed_species):
    """Two smooth anisotropic bumps, positive and Fermi-admissible."""
    X, Y = grid12.coords()
    f0 = 0.8 * np.exp(-((X - 0.4) ** 2 + 1.3 * (Y + 0.2) ** 2) / 1.1)
    f1 = 0.25 * np.exp(-(1.1 * (X + 0.5) ** 2 + (Y - 0.3) ** 2) / 0.9)
    return [f0, f1]
