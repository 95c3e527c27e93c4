import pytest

from kakutani import branch_systems as bs


@pytest.fixture
def dyadic():
    return bs.dyadic()


@pytest.fixture
def two_fifths():
    return bs.kakutani("2/5")


@pytest.fixture
def golden():
    return bs.golden()


@pytest.fixture
def g_eps_dyadic():
    return bs.build_conjugated_system(bs.dyadic(), bs.Conjugacy.g_epsilon(0.1))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
