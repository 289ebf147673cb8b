import pytest

from qverify.kernel import default_context

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ctx():
    return default_context()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
