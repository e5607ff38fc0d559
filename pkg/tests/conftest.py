import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    """Store one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number: int, name: str, passed: bool, detail: str, seconds: float) -> str:
        mark = "PASS" if passed else "FAIL"
        line = f"[{mark}] criterion {number}: {name} -- {detail} ({seconds:.2f} s)"
        _ACCEPTANCE[number] = line
        print(line)
        return line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
