import time

import pytest

from spinescan.cli import simulate
from spinescan.config import Scenario
from spinescan.phantom import PhantomModel

# A 12 cm back with all three regions, for scans that only need the loop mechanics.
SHORT = dict(scan_span=0.12, region_bounds=(0.03, 0.08))

_ACCEPTANCE_LINES = []


def short_phantom(**kw) -> PhantomModel:
    return PhantomModel(**{**SHORT, **kw})


@pytest.fixture(scope="session")
def default_pair():
    """Robotic and manual scans of the default scenario, with the robotic wall time."""
    start = time.perf_counter()
    robotic = simulate(Scenario(), "robotic")
    wall = time.perf_counter() - start
    return {"robotic": robotic, "manual": simulate(Scenario(), "manual")}, wall


@pytest.fixture(scope="session")
def default_log(default_pair):
    return default_pair[0]["robotic"]


@pytest.fixture(scope="session")
def acceptance_lines():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
