import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def diag_state(*p):
    return np.diag(np.asarray(p, dtype=complex))


def ket_state(*amps):
    v = np.asarray(amps, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


PLUS = ket_state(1, 1)
MINUS = ket_state(1, -1)
E1 = diag_state(1, 0)
E2 = diag_state(0, 1)


# criterion id -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def record(criterion: int, passed: bool, detail: str):
    ACCEPTANCE[criterion] = (bool(passed), detail)
    line = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
