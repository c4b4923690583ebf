from pathlib import Path

import pytest

from bayes_aco.grid import load_map, parse_map
from bayes_aco.harness import bundled_map, bundled_maps

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []

GOLDEN = Path(__file__).parent / "golden"


def fixture_map(name):
    return load_map(bundled_map(name))


@pytest.fixture(scope="session")
def all_maps():
    return {name: fixture_map(name) for name in bundled_maps()}


@pytest.fixture
def open3():
    return parse_map("S..\n...\n..G\n")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
