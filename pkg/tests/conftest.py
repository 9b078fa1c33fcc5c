import numpy as np
import pytest

from cartankit import Element, TripleSpace

SPACES = [
    "disc",
    "disc+disc",
    "rect:2x2",
    "rect:3x2",
    "rect:2x4",
    "sym:3",
    "antisym:4",
    "antisym:5",
    "spin:3",
    "spin:5",
    "rect:2x2+spin:3",
]


def disc(v):
    return Element.from_coords(TripleSpace.parse("disc"), [v])


def bidisc(u, v):
    return Element.from_coords(TripleSpace.parse("disc+disc"), [u, v])


def mat(space, m):
    """Element of a single rectangular factor from a dense matrix."""
    sp = TripleSpace.parse(space) if isinstance(space, str) else space
    return Element(sp, [np.asarray(m, dtype=complex)])


@pytest.fixture(params=SPACES)
def space(request):
    return TripleSpace.parse(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = {}


def record_criterion(number: int, title: str, passed: bool, detail: str):
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
