"""Collects acceptance outcomes so the run ends with one PASS/FAIL line per criterion."""
import pytest

_outcomes: dict = {}
_details: dict = {}


@pytest.fixture
def detail(request):
    """Attach a measured quantity to the criterion's summary line."""
    mark = request.node.get_closest_marker("criterion")
    number = mark.args[0] if mark else None

    def add(text):
        _details.setdefault(number, []).append(text)
        print(text)
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, title = mark.args
    entry = _outcomes.setdefault(number, {"title": title, "passed": True, "tests": []})
    if rep.failed:
        entry["passed"] = False
    if rep.when == "call" or rep.failed:
        entry["tests"].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_outcomes):
        e = _outcomes[number]
        status = "PASS" if e["passed"] else "FAIL"
        failing = [name for name, outcome in e["tests"] if outcome == "failed"]
        tail = f"  (failing: {', '.join(failing)})" if failing else ""
        tr.write_line(f"criterion {number:>2}: {status}  {e['title']}{tail}")
        for text in _details.get(number, []):
            tr.write_line(f"    {text}")
