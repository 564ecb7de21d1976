import numpy as np
import pytest

from balanced_pairs.maps import FiniteMap


def random_symmetric_map(spec, elements, dim, rng, scale=1.0):
    table = {}
    for g in elements:
        gi = spec.inverse(g)
        if g in table:
            continue
        M = scale * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
        if g == gi:
            M = (M + M.conj().T) / 2
        table[g] = M
        table[gi] = M.conj().T
    return FiniteMap(spec, table)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
