import pytest

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion.

    Usage: ``acceptance(3, ok, "detail")``; the lines are printed in order in
    the terminal summary whether or not the owning test passed.
    """
    def record(number, ok, detail):
        _ACCEPTANCE[number] = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} ({detail})"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
