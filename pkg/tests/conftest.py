import pytest

_LINES: list[tuple[int, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; the test still asserts."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _LINES.append((number, bool(ok), detail))
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_LINES):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
