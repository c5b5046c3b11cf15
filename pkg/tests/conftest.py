import numpy as np
import pytest

from udisc.qmat import random_unitary

ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail=""):
    ACCEPTANCE_LINES.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unitaries(rng, n):
    return [random_unitary(rng) for _ in range(n)]


def random_pairs(rng, n, min_theta=0.05):
    """Random (U, V) pairs whose eigenphase arc exceeds ``min_theta``."""
    from udisc.arc import eigenphase_arc

    out = []
    while len(out) < n:
        u, v = random_unitary(rng), random_unitary(rng)
        if eigenphase_arc(u.conj().T @ v).theta > min_theta:
            out.append((u, v))
    return out
