import sys
import pytest
from hypothesis import HealthCheck, settings

from outdyn.io import load_graph_map

settings.register_profile("outdyn", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("outdyn")


def _load(name):
    return load_graph_map(name)


@pytest.fixture(scope="session")
def fib():
    return _load("fib")


@pytest.fixture(scope="session")
def fibc():
    return _load("fibc")


@pytest.fixture(scope="session")
def fibs():
    return _load("fibs")


@pytest.fixture(scope="session")
def ident():
    return _load("id")


@pytest.fixture(scope="session")
def pg1():
    return _load("pg1")


@pytest.fixture(scope="session")
def fib_inv():
    return _load("fib_inv")


@pytest.fixture(scope="session")
def corpus(fib, fibc, fibs, ident, pg1):
    return {"fib": fib, "fibc": fibc, "fibs": fibs, "id": ident, "pg1": pg1}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
