import numpy as np
import pytest

from monochain import toda
from monochain.spectral import build_params


@pytest.fixture(scope="session")
def fields_21_small():
    """Hitchin data for k=2, l=1, beta=2pi on a 16x16 grid."""
    p = build_params(2, 1)
    sol = toda.solve(p, 16, 16, tol=1e-11)
    assert sol.converged
    return toda.assemble_hitchin(p, sol)


@pytest.fixture(scope="session")
def sol_21():
    p = build_params(2, 1)
    return toda.solve(p, 32, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.setdefault(number, []).append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        for line in ACCEPTANCE_LINES[n]:
            terminalreporter.write_line(line)
