import numpy as np
import pytest

from gnepkit.scenarios import HeatMarketConfig, build_cournot, build_heat_market

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def cournot_cap1():
    return build_cournot(4.0, 1.0, [1.0, 1.5], cap=1.0)


@pytest.fixture(scope="session")
def cournot_free():
    return build_cournot(4.0, 1.0, [1.0, 1.5])


@pytest.fixture(scope="session")
def heat_game():
    return build_heat_market(HeatMarketConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record():
    """Store one acceptance line per criterion; printed at the end of the run."""

    def _record(key, ok, detail):
        ACCEPTANCE[key] = (bool(ok), detail)
        return bool(ok)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
