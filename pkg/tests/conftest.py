import pytest

_RESULTS: dict[int, list] = {}


@pytest.fixture
def criterion():
    """record(number, ok, detail) stores one sub-result for the summary."""
    def record(number: int, ok: bool, detail: str = ""):
        _RESULTS.setdefault(number, []).append((bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for number in sorted(_RESULTS):
        parts = _RESULTS[number]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        tr.write_line(f"criterion {number:>2}: {status}")
        for ok, detail in parts:
            tr.write_line(f"    [{'ok' if ok else 'xx'}] {detail}")
