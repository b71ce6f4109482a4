import contextlib
import time

import pytest

_CRITERIA: dict[int, str] = {}
_DETAILS: dict[int, list[str]] = {}


@contextlib.contextmanager
def _record(number: int, title: str):
    t0 = time.perf_counter()
    details = _DETAILS.setdefault(number, [])
    details.clear()
    try:
        yield details
    except BaseException as e:
        _CRITERIA[number] = f"criterion {number:2d} FAIL  {title} ({time.perf_counter() - t0:.1f}s): {str(e).splitlines()[0] if str(e) else type(e).__name__}"
        raise
    _CRITERIA[number] = f"criterion {number:2d} PASS  {title} ({time.perf_counter() - t0:.1f}s)"


@pytest.fixture
def criterion():
    """``with criterion(n, title) as details:`` records a pass/fail line (plus detail lines) for the summary."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[n])
        for line in _DETAILS.get(n, []):
            terminalreporter.write_line("      " + line)
