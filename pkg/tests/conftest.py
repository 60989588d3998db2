import numpy as np
import pytest

from gmminterp.core import CoordinateFrame, PointSet


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_points(rng, n, w, h, channels=1):
    pos = np.column_stack([rng.uniform(-0.5, w - 0.5, n), rng.uniform(-0.5, h - 0.5, n)])
    return PointSet(pos, rng.uniform(0, 1, (n, channels)))


@pytest.fixture
def three_points():
    # The points (0,0):1, (2,0):0, (0,2):0 shifted by (-0.5, -0.5) so the
    # query (0.5, 0.5) lands on pixel center (0, 0).
    ps = PointSet([[-0.5, -0.5], [1.5, -0.5], [-0.5, 1.5]], [[1.0], [0.0], [0.0]])
    return ps, CoordinateFrame(1, 1)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
