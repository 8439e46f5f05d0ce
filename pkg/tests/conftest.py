import numpy as np
import pytest

from curveparam.curve_geometry import BoundaryCurve, Projection, ReachEstimate, circle, ellipse, spline
from curveparam.triangulation import generate_equilateral_grid

# centers chosen off every grid lattice used below
CIRCLE_CENTER = (0.0123, -0.0371)
ELLIPSE_CENTER = (0.013, -0.021)
BLOB_SHIFT = (0.011, -0.017)


def blob_points(n=12, shift=BLOB_SHIFT):
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    r = 1 + 0.15 * np.cos(3 * th)
    return np.c_[r * np.cos(th) + shift[0], r * np.sin(th) + shift[1]]


class StraightLine(BoundaryCurve):
    """Zero-curvature fixture: the segment ``y = y0``, ``x0 <= x <= x1``,
    outward normal ``+y``.

    Only projections of points with ``x`` in range are meaningful, so it is
    paired with meshes that stay inside the slab.
    """

    kind = "line"

    def __init__(self, y0=0.0, x0=-10.0, x1=10.0):
        self.y0, self.x0, self.x1 = float(y0), float(x0), float(x1)
        self.lengths = np.array([self.x1 - self.x0])
        self._bbox = (self.x0, self.y0, self.x1, self.y0)
        self.reach = ReachEstimate(np.inf, "analytic", 0)

    def _at(self, x, phi):
        n = len(x)
        return Projection(
            position=np.c_[x, np.full(n, self.y0)],
            tangent=np.tile([1.0, 0.0], (n, 1)),
            normal=np.tile([0.0, 1.0], (n, 1)),
            curvature=np.zeros(n),
            phi=phi,
            component=np.zeros(n, dtype=int),
            s=(x - self.x0) / self.lengths[0],
            param=x,
        )

    def project(self, points, strict=True):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        return self._at(P[:, 0].copy(), P[:, 1] - self.y0)

    def sample(self, spacing=None, n=None):
        m = int(np.ceil(self.lengths[0] / spacing)) if spacing else (n or 1024)
        x = np.linspace(self.x0, self.x1, m)
        return self._at(x, np.zeros(m))

    def inside(self, points):
        return np.atleast_2d(points)[:, 1] < self.y0


@pytest.fixture(scope="session")
def unit_circle():
    return circle(CIRCLE_CENTER, 1.0)


@pytest.fixture(scope="session")
def grid_02():
    return generate_equilateral_grid((-1.3, -1.3, 1.3, 1.3), 0.2)


@pytest.fixture(scope="session")
def grid_03():
    return generate_equilateral_grid((-1.3, -1.3, 1.3, 1.3), 0.3)


@pytest.fixture(scope="session")
def ellipse_21():
    return ellipse(ELLIPSE_CENTER, 2.0, 1.0)


@pytest.fixture(scope="session")
def blob():
    return spline(blob_points())


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
