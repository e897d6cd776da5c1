import numpy as np
import pytest

from compevo.data import synth_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def xor_small():
    return synth_dataset("noisy_xor", 120, 0.05, seed=3)


@pytest.fixture(scope="session")
def linear_small():
    return synth_dataset("linear_regression", 120, 0.1, seed=3)


# Acceptance verdicts, filled by test_acceptance.py and printed at the end of the run.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
