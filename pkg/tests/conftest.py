import pytest

from imshag.scenario import load_canonical

_criteria: dict[str, list[str]] = {}
_titles: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    cid, title = marker.args
    _titles[cid] = title
    _criteria.setdefault(cid, []).append("PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_criteria, key=lambda c: (len(c), c)):
        results = _criteria[cid]
        status = "PASS" if all(r == "PASS" for r in results) else "FAIL"
        terminalreporter.write_line(
            f"criterion {cid}: {status} ({results.count('PASS')}/{len(results)} checks) {_titles[cid]}"
        )


@pytest.fixture(scope="session")
def canonical():
    return load_canonical()
