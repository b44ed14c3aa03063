import numpy as np
import pytest

from econcast.network import NetworkConfig

RHO = 1e-5
COST = 5e-4


@pytest.fixture
def paper_net():
    """Return a factory for the homogeneous 10 uW / 0.5 mW clique."""

    def make(n, topology=None):
        return NetworkConfig.homogeneous(n, RHO, COST, COST, topology)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, title, checks):
        ok = all(passed for passed, _ in checks)
        detail = "; ".join(f"{'ok' if passed else 'MISS'} {text}" for passed, text in checks)
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _CRITERIA.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
