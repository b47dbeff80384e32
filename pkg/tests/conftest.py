import numpy as np
import pytest

from admr_sim import bloch, cavity

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    title = getattr(report, "acceptance", None)
    if title is not None:
        _ACCEPTANCE[report.nodeid] = (title, report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        report.acceptance = f"{mark.args[0]:>2}. {mark.args[1]}"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for title, passed in sorted(_ACCEPTANCE.values()):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {title}")


@pytest.fixture
def rates():
    return bloch.RateSet()


@pytest.fixture
def fig3_cavity():
    return cavity.CavityConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
