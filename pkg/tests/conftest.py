import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def kron_all(*ops):
    """Reference Kronecker product, independent of ghzguard.qcore.tensor."""
    out = np.array([[1.0 + 0j]]) if np.ndim(ops[0]) == 2 else np.array([1.0 + 0j])
    for op in ops:
        out = np.kron(out, op)
    return out


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    """Store and print one verdict line; the lines are repeated in the terminal summary."""
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
