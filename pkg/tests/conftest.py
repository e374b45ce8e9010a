import numpy as np
import pytest
from hypothesis import settings

from linkexchange.graph import Graph, generate_ba, generate_er

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

ACCEPTANCE = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def triangle():
    return Graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def small_er():
    return generate_er(60, 180, seed=4)


@pytest.fixture
def small_ba():
    return generate_ba(60, 3, seed=4)


def random_small_graphs(count, max_nodes=100, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(10, max_nodes + 1))
        if i % 2:
            out.append(generate_ba(n, int(rng.integers(1, 4)), seed=i))
        else:
            m = int(rng.integers(n, min(3 * n, n * (n - 1) // 2) + 1))
            out.append(generate_er(n, m, seed=i))
    return out
