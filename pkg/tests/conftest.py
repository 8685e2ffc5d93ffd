"""Shared fixtures and the acceptance-suite summary printer."""

import pytest

from ionrotor.crystal import TrapConfig, find_equilibrium, tunnelling_trap
from ionrotor.modes import normal_modes
from ionrotor.quantum import band_levels
from ionrotor.rotor import rotor_potential


@pytest.fixture(scope="session")
def default_trap():
    return TrapConfig.default()


@pytest.fixture(scope="session")
def tunnel_trap():
    return tunnelling_trap()


@pytest.fixture(scope="session")
def tunnel_rotor(tunnel_trap):
    return rotor_potential(tunnel_trap, n_theta=256)


@pytest.fixture(scope="session")
def tunnel_bands(tunnel_rotor):
    return band_levels(tunnel_rotor, flux_quanta=0.0)


@pytest.fixture(scope="session")
def tunnel_modes(tunnel_trap):
    return normal_modes(find_equilibrium(tunnel_trap))


_acceptance_results = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _acceptance_results.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _acceptance_results:
        label = name.replace("test_criterion_", "criterion ")
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{label}: {status}")
