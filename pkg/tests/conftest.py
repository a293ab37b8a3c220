import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bayeskern import BasisSet, Dataset, KernelSpec  # noqa: E402
from bayeskern.numerics import make_rng  # noqa: E402


@pytest.fixture
def se_problem():
    """Jittered-grid scalar regression problem with a squared-exponential kernel."""
    rng = make_rng(2024)
    x = np.linspace(0, 20, 25) + rng.uniform(-0.2, 0.2, 25)
    y = np.sin(x / 2) + 0.2 * rng.standard_normal(25)
    spec = KernelSpec("squared-exp-general", {"amplitude": 1.0, "lengthscale": 1.5})
    return Dataset(x, y), spec, BasisSet(x, spec)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
