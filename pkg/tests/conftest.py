import pytest

from npriem import catalog


@pytest.fixture(scope="session")
def entries():
    return {mid: catalog.load(mid) for mid in catalog.MANIFOLD_IDS}


@pytest.fixture(scope="session")
def euclid(entries):
    return entries["euclidean"]


@pytest.fixture(scope="session")
def s3(entries):
    return entries["s3_round"]


@pytest.fixture(scope="session")
def h3(entries):
    return entries["h3"]


@pytest.fixture(scope="session")
def h2xr(entries):
    return entries["h2xr"]


def pytest_terminal_summary(terminalreporter):
    import helpers
    if helpers.ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in helpers.ACCEPTANCE:
            terminalreporter.write_line(line)
