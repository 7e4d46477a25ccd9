import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

# frozen from the mpmath oracles in oracles.py (see test_oracles.py)
FROZEN = {
    "pullback_M": 1.0724538589718788,
    "L_star_40": 0.56448321218796748371,
    "L_star_20": 0.56444857974958928474,
    "kp_a1": 0.22939407468943306956,
    "root_1_1": 0.13814452356068627875,
    "root_05_1": 0.19114740326491788029,
}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion number -> (passed, summary), filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, text = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if passed else 'FAIL'}  {text}")
