import numpy as np
import pytest

from swipegan.layout import reference_qwerty

LEXICON = [
    "the", "and", "you", "that", "with", "have", "this", "from", "they", "what",
    "word", "work", "time", "tree", "great", "good", "gold", "anybody", "people", "could",
]


@pytest.fixture(scope="session")
def layout():
    return reference_qwerty()


@pytest.fixture(scope="session")
def lexicon():
    return list(LEXICON)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One line per acceptance criterion, printed in the terminal summary so the
# verdicts are visible without -s.
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    def record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
