import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qbratu import continuation, pde  # noqa: E402

# lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def upper_seed_point():
    """First upper-branch point: multi-start (8 starts) at lambda = 3.0, seed 0."""
    return continuation.bootstrap_upper(3.0, pde.TrialConfig(lam=3.0), 500, seed=0, n_starts=8)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
