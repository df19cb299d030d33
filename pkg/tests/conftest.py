import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from temporal_sortition import Instance, fixture

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def line(*xs) -> Instance:
    return Instance.from_points(np.asarray(xs, dtype=float)[:, None], "l1")


@pytest.fixture
def fig1():
    return fixture("figure1")


@pytest.fixture
def thm1():
    return fixture("theorem1")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        _CRITERIA[props["criterion"]] = (report.passed, props.get("detail", ""), report.duration)


_CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        ok, detail, secs = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'} ({secs:.1f}s) {detail}")
