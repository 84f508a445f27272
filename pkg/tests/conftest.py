import math

import pytest

from qglab.solver import certification_tally

# criterion id -> list of (test name, passed)
_OUTCOMES: dict[str, list[tuple[str, bool]]] = {}
_DETAILS: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id): acceptance criterion covered by the test")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _OUTCOMES.setdefault(str(mark.args[0]), []).append((item.name, rep.passed))


@pytest.fixture
def note(request):
    """Attach a one-line measurement to the criterion of the running test."""
    mark = request.node.get_closest_marker("criterion")
    key = str(mark.args[0]) if mark else request.node.name

    def _note(text: str):
        _DETAILS.setdefault(key, []).append(text)
        print(text)

    return _note


def _sort_key(k: str):
    head = k.split(".")[0]
    return (int(head) if head.isdigit() else math.inf, k)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(_OUTCOMES, key=_sort_key):
        runs = _OUTCOMES[key]
        ok = all(p for _, p in runs)
        failed = [n for n, p in runs if not p]
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'} ({len(runs)} test{'s' if len(runs) != 1 else ''})"
        if failed:
            line += " failing: " + ", ".join(failed)
        tr.write_line(line)
        for d in _DETAILS.get(key, []):
            tr.write_line(f"    {d}")
    tally = certification_tally()
    status = "PASS" if tally["violations"] == 0 else "FAIL"
    tr.write_line(
        f"count certification over the whole run: {status} "
        f"({tally['checks']} certified counts, {tally['violations']} violations)"
    )
