"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

_results: dict[int, tuple[str, list[bool]]] = {}


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    _results.setdefault(number, (title, []))[1].append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, oks = _results[number]
        status = "PASS" if all(oks) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
