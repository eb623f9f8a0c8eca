import pytest

from vpkit.cache import ArrayCache
from vpkit.cli import build_context
from vpkit.config import load_config

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def run_config():
    return load_config(None)


@pytest.fixture(scope="session")
def density_cache(pytestconfig):
    """Content-addressed cache for WK and F2 densities, kept between test sessions."""
    return ArrayCache(pytestconfig.cache.mkdir("vpkit"))


@pytest.fixture(scope="session")
def contexts(run_config, density_cache):
    return {s.name: build_context(s, run_config.numerics, run_config.constants, density_cache)
            for s in run_config.systems}


@pytest.fixture(scope="session")
def reports(run_config, contexts):
    return {(name, label): ctx.report(label) for name, ctx in contexts.items() for label in run_config.states}
