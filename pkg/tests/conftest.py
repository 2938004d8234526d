import numpy as np
import pytest
from hypothesis import strategies as st

from mmqkd.gaussian_core import tensor, tmsv
from mmqkd.network import apply_beamsplitter

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    def log(criterion: str, passed: bool, detail: str = "") -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_pure_state(rng: np.random.Generator, pairs: int, couplings: int) -> np.ndarray:
    """Twin beams mixed by random beamsplitters across all modes."""
    gamma = tensor(*(tmsv(v) for v in rng.uniform(1, 10, pairs)))
    m = 2 * pairs
    for _ in range(couplings):
        i, j = rng.choice(m, 2, replace=False)
        gamma = apply_beamsplitter(gamma, int(i), int(j), float(rng.uniform(0, 1)))
    return gamma


variances = st.floats(1.0, 20.0, allow_nan=False)
transmittances = st.floats(0.01, 1.0, allow_nan=False)
noises = st.floats(0.0, 0.2, allow_nan=False)


@st.composite
def gains(draw, n):
    g = draw(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=n, max_size=n))
    if sum(x * x for x in g) < 1e-6:
        g[0] = 1.0
    return g
