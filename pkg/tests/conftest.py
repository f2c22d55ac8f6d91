import numpy as np
import pytest

from ldgflow.blocksolve import available_backends


@pytest.fixture(params=available_backends())
def backend(request):
    """Run solver tests under every built linear-algebra backend."""
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_star_polygon(rng, nverts=50, r_lo=0.5, r_hi=1.5, center=(0.0, 0.0)):
    """Random star-shaped polygon (always simple, generally non-convex)."""
    from ldgflow.polygons import Polygon

    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, nverts))
    radii = rng.uniform(r_lo, r_hi, nverts)
    x = center[0] + radii * np.cos(angles)
    y = center[1] + radii * np.sin(angles)
    return Polygon(np.column_stack([x, y]))
