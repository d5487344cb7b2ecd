import pytest

from finpop.hypotheses import HypothesisClass
from finpop.population import FinitePopulation


@pytest.fixture
def urn4():
    """Labels (1, 1, 0, 0) on four distinct points."""
    return FinitePopulation.from_arrays([0.0, 1.0, 2.0, 3.0], [1, 1, 0, 0])


@pytest.fixture
def all_zeros4():
    return HypothesisClass.explicit([(0, 0, 0, 0)])


ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split()[0])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
