import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one verdict line for the end-of-run acceptance summary."""
    def emit(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return emit


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    key = lambda line: int(line.split("criterion ")[1].split(":")[0])
    for line in sorted(ACCEPTANCE_LINES, key=key):
        terminalreporter.write_line(line)
