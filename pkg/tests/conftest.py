import math

import pytest

from shellvar.surface import Sphere, Torus

ACCEPTANCE_LINES: list[str] = []

# sphere center off the origin so that r.N is not constant
OFFSET = (0.3, -0.2, 0.1)
BAND = (0.3, math.pi - 0.3)


def record(criterion: str, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def torus():
    return Torus(2.0, 1.0)


@pytest.fixture(scope="session")
def sphere():
    return Sphere(1.0)
