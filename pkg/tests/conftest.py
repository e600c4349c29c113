import sys

import pytest

from voatwist.fusion import FusionEngine


@pytest.fixture(scope="session")
def engine():
    return FusionEngine(4)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
