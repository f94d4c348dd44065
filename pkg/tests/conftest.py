import json
from pathlib import Path

import pytest

ORACLE_PATH = Path(__file__).parent / "oracles" / "frozen.json"


@pytest.fixture(scope="session")
def oracle():
    """Reference values frozen from an independent high-precision library."""
    return json.loads(ORACLE_PATH.read_text())


@pytest.fixture(scope="session")
def gue200():
    """The N = 200, 10^4-sample Gaussian experiment shared by several tests."""
    from rmtlab.ensemble import EnsembleConfig, draw_spectra

    cfg = EnsembleConfig(200, samples=10_000, seed=0)
    return draw_spectra(cfg)


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test still asserts on its own."""
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        with request.config.pluginmanager.get_plugin("capturemanager").global_and_fixture_disabled():
            print("\n" + line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
