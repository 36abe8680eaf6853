import numpy as np
import pytest

from subdivforms import meshgen
from subdivforms.subdivision import build_hierarchy

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE = {}


def record(n, passed, detail):
    line = f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])


@pytest.fixture(scope="session")
def square4():
    return meshgen.structured_square(4)


@pytest.fixture(scope="session")
def disk():
    return meshgen.irregular_disk()


@pytest.fixture(scope="session")
def annulus():
    return meshgen.annulus()


@pytest.fixture(scope="session")
def lw_square():
    return build_hierarchy(meshgen.structured_square(4), 3, "loopwang")


@pytest.fixture(scope="session")
def wh_square():
    return build_hierarchy(meshgen.structured_square(4), 3, "whitney")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
