import numpy as np
import pytest

SEED = 7


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


# criterion number -> bool, filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ACCEPTANCE[k] else 'FAIL'}")
