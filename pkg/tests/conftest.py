import functools
import warnings

import pytest

from hypervlasov import runner
from hypervlasov.scenarios import load_config

SCENARIO_NAMES = ("free_stream", "vacuum_radiation", "isolated_plasma", "driven_plasma", "spherical_shell")

# criterion number -> (passed, message); filled by the acceptance tests
ACCEPTANCE = {}


@functools.lru_cache(maxsize=None)
def default_run(scenario, *overrides):
    cfg = load_config(None, (f"scenario={scenario}",) + overrides)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return runner.run_config(cfg)


@functools.lru_cache(maxsize=None)
def refinement(scenario, levels=3):
    cfg = load_config(None, (f"scenario={scenario}",))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return runner.refine(cfg, levels)


@pytest.fixture(scope="session")
def runs():
    return default_run


@pytest.fixture(scope="session")
def refinements():
    return refinement


@pytest.fixture
def report():
    def record(number, passed, message):
        ACCEPTANCE[number] = (bool(passed), message)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, message = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {message}")
