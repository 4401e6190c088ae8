import pytest

import eigensearch as es
import instances

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def ref12():
    return instances.ref12_instance()


@pytest.fixture(scope="session")
def ref12_operator(ref12):
    return es.build_search_operator(ref12)


@pytest.fixture(scope="session")
def grover64():
    return instances.grover_instance()


@pytest.fixture
def acceptance_log():
    def log(name, ok, detail):
        ACCEPTANCE_LINES.append(
            f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, f"{name}: {detail}"
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
