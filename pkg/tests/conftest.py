import pytest

_RESULTS = []


@pytest.fixture
def record():
    """Register the outcome of one acceptance criterion (or criterion part)."""

    def _record(criterion, passed, detail):
        _RESULTS.append((criterion, bool(passed), detail))
        return passed

    return _record


def _key(item):
    head = item[0].split()[0]
    num = "".join(ch for ch in head if ch.isdigit())
    return (int(num) if num else 99, item[0])


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_RESULTS, key=_key):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
