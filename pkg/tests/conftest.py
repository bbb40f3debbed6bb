"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.fixture
def record(request):
    """Attach a measured value to the current test's acceptance line."""
    def _record(text: str):
        request.node.user_properties.append(("measured", text))
    return _record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "measured": []})
    entry["ok"] = entry["ok"] and rep.passed
    entry["measured"] += [v for k, v in item.user_properties if k == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["ok"] else "FAIL"
        detail = "; ".join(e["measured"])
        terminalreporter.write_line(f"[{status}] {number:2d}. {e['title']}" + (f" | {detail}" if detail else ""))
