import os

import pytest

from epinomic.datahub import load_packaged
from helpers import ACCEPTANCE, make_dataset


@pytest.fixture(scope="session")
def fixture2():
    return make_dataset(G=2, K=3, seed=1)


@pytest.fixture(scope="session")
def fixture3():
    return make_dataset(G=3, K=4, seed=2)


@pytest.fixture(scope="session")
def be():
    return load_packaged("BE")


@pytest.fixture(scope="session")
def swe():
    return load_packaged("SWE")


@pytest.fixture
def numpy_backend():
    return os.environ.get("ARTIFACT_DISABLE_NUMBA", "0") not in ("", "0", "false", "False")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
