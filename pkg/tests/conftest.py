import numpy as np
import pytest

from riesz_compare.data import AteDgpConfig, ShiftDgpConfig, generate_ate_dgp, generate_shift_dgp


@pytest.fixture
def ate_data():
    return generate_ate_dgp(AteDgpConfig(n=300, seed=3))


@pytest.fixture
def shift_data():
    return generate_shift_dgp(ShiftDgpConfig(n_source=300, n_target=200, mean_shift=0.7, seed=5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in sorted(test_acceptance.RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:2d}: {detail}")
