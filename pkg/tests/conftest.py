import pytest

from lbubfl.core import Instance

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def t1() -> Instance:
    """Three facilities on a line, six clients, L=2, U=3."""
    return Instance.on_line([0, 1, 2], [0.1, 0.2, 0.9, 1.1, 1.9, 2.1], [1, 1, 1], 2, 3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
