import pytest

from crowdrisk.maps import generate_library
from crowdrisk.sim import ScenarioConfig, run


@pytest.fixture(scope="session")
def sf_run():
    """Default SocialForces corridor run, seed 1."""
    return run(ScenarioConfig())


@pytest.fixture(scope="session")
def speaking_lib():
    return generate_library(["speaking"])


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def record_criterion(request):
    """Record one acceptance verdict line, keyed by criterion number."""
    def record(number, line):
        request.config.stash.setdefault(ACCEPTANCE_KEY, {})[number] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 11):
        terminalreporter.write_line(results.get(number, f"criterion {number:2d} FAIL: no verdict (test errored or was skipped)"))
