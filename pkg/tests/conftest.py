import pytest

# acceptance verdicts, filled by tests/test_acceptance.py and printed at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture
def record_criterion():
    def record(number: int, title: str, passed: bool, detail: str):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return passed

    return record
