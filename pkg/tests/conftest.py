import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from cttmfg.lqg import TimeGrid  # noqa: E402
from cttmfg.scenario import reference_scenario  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    def _report(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _report


@pytest.fixture(scope="session")
def coarse_grid():
    return TimeGrid(1e-2, 600)


@pytest.fixture(scope="session")
def s5_linear():
    return reference_scenario("linear", mu=1484.0)


@pytest.fixture(scope="session")
def s5_coarse(coarse_grid):
    return reference_scenario("linear", mu=1484.0, grid=coarse_grid)


@pytest.fixture(scope="session")
def nfp_linear():
    from cttmfg.nearfp import Algo1Params, algorithm1
    return algorithm1(Algo1Params(), reference_scenario("linear"))


@pytest.fixture(scope="session")
def nfp_exp():
    from cttmfg.nearfp import Algo1Params, algorithm1
    return algorithm1(Algo1Params(), reference_scenario("exp"))
