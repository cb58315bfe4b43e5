import sys
from pathlib import Path

import numpy as np
import pytest

from qssvqe.synthesis import build_rotation_library

DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(rng, dim):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


@pytest.fixture(scope="session")
def library_nq1():
    return build_rotation_library(1, depth=4, seed=1)


@pytest.fixture(scope="session")
def library_nq2():
    return build_rotation_library(2, depth=4, seed=2)


@pytest.fixture(scope="session")
def library_nq3():
    return build_rotation_library(3, depth=8, seed=3)


@pytest.fixture
def h2_file():
    return DATA / "h2_sto3g_R0.735.jsonl"


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
