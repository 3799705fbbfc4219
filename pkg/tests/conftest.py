import pytest

import functools
import os

from dualem.electrostatic import default_cross_section, segment_capacitance_matrix
from dualem.scenarios import run_scenario, spec_for

THREADS = max(1, min(4, os.cpu_count() or 1))

# filled by test_acceptance.py; printed once at the end of the run
ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture(scope="session")
def default_model():
    return default_cross_section()


@pytest.fixture(scope="session")
def default_matrix(default_model):
    return segment_capacitance_matrix(default_model)


@functools.lru_cache(maxsize=None)
def scenario(kind):
    """Default-spec results of a scenario, computed once per session."""
    return tuple(run_scenario(spec_for(kind), THREADS))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int("".join(c for c in k if c.isdigit())), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
