import sys

import hypothesis
import numpy as np
import pytest

from gazeval.grid import Grid, PixelCoord

hypothesis.settings.register_profile(
    "suite", max_examples=50, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("suite")


def rand_grid(rng: np.random.Generator, width: int, height: int, lo=0.0, hi=1.0) -> Grid:
    return Grid(rng.uniform(lo, hi, size=(height, width)))


def rand_point(rng: np.random.Generator, width: int, height: int) -> PixelCoord:
    return PixelCoord(rng.uniform(0, width - 1e-9), rng.uniform(0, height - 1e-9))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-criterion verdict lines into the run summary."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERIA_LOG", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
