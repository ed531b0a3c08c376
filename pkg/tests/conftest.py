import numpy as np
import pytest

_criteria: dict[int, list] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = report.user_properties and dict(report.user_properties).get("criterion")
    if marker:
        _criteria.setdefault(marker, []).append((report.nodeid, report.outcome))


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        results = _criteria[number]
        failed = [nid for nid, outcome in results if outcome != "passed"]
        status = "PASS" if not failed else "FAIL"
        terminalreporter.write_line(
            f"criterion {number}: {status} ({len(results) - len(failed)}/{len(results)} checks passed)"
        )
        for nid in failed:
            terminalreporter.write_line(f"    failed: {nid}")
