"""Closed planar polygons, areas, and the manifold distance between curves.

The manifold distance M(P1, P2) = |O1| + |O2| - 2|O1 ^ O2| (areas of the
enclosed regions and of their intersection) is the error metric used by
every convergence study, so the intersection must be trustworthy well below
1e-6. The primary backend is shapely/GEOS boolean clipping, which handles
the non-convex inputs arising from the flower and Mikula curves; a
Monte-Carlo symmetric-difference estimator with an independent
point-in-polygon test is kept permanently as the testing oracle and as the
(logged) fallback if clipping rejects an input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import shapely

from .errors import GeometryError

log = logging.getLogger(__name__)


def shoelace_area(vertices):
    """Signed area of a closed polyline (positive for counterclockwise)."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class Polygon:
    """Closed polygon, normalized to counterclockwise orientation.

    The input orientation is recorded in ``input_clockwise``. Vertices are
    stored without a repeated closing point. Simplicity is not enforced at
    construction; ``manifold_distance`` checks it where required.
    """

    vertices: np.ndarray
    input_clockwise: bool = field(init=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise GeometryError(f"polygon needs >= 3 planar vertices, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise GeometryError("polygon vertices must be finite")
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        if v.shape[0] < 3:
            raise GeometryError("polygon collapsed to fewer than 3 vertices")
        signed = shoelace_area(v)
        clockwise = signed < 0
        if clockwise:
            v = v[::-1].copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "input_clockwise", bool(clockwise))

    @property
    def area(self):
        return shoelace_area(self.vertices)

    @property
    def diameter(self):
        """Diagonal of the bounding box (cheap size scale)."""
        v = self.vertices
        return float(np.hypot(*(v.max(axis=0) - v.min(axis=0))))

    def is_simple(self):
        return bool(shapely.LinearRing(self.vertices).is_simple)

    def scaled(self, factor):
        return Polygon(self.vertices * factor)

    def translated(self, offset):
        return Polygon(self.vertices + np.asarray(offset, dtype=float))

    def rotated(self, angle):
        c, s = np.cos(angle), np.sin(angle)
        return Polygon(self.vertices @ np.array([[c, s], [-s, c]]))

    def cleaned(self, rel_tol=1e-13):
        """Drop consecutive vertices closer than rel_tol * diameter."""
        v = self.vertices
        tol = rel_tol * self.diameter
        keep = np.linalg.norm(v - np.roll(v, 1, axis=0), axis=1) > tol
        keep[0] = True  # anchor; the wrap pair is checked by index N-1
        if np.all(keep):
            return self
        return Polygon(v[keep])


def manifold_distance(poly1, poly2, mc_fallback_samples=2_000_000, rng=None):
    """Area of the symmetric difference of the regions enclosed by two curves.

    Both polygons must be simple after the dedup cleanup pass; non-simple
    input raises GeometryError. If GEOS rejects the boolean operation the
    Monte-Carlo estimator is used instead and a warning is logged.
    """
    a = poly1.cleaned()
    b = poly2.cleaned()
    for name, p in (("first", a), ("second", b)):
        if not p.is_simple():
            raise GeometryError(f"{name} polygon is not simple after cleanup")
    area1, area2 = a.area, b.area
    try:
        inter = shapely.Polygon(a.vertices).intersection(shapely.Polygon(b.vertices))
        return area1 + area2 - 2.0 * inter.area
    except shapely.errors.GEOSException as exc:  # pragma: no cover - rare
        log.warning(
            "polygon clipping failed (%s); falling back to Monte-Carlo "
            "symmetric difference with %d samples",
            exc,
            mc_fallback_samples,
        )
        est, _ = monte_carlo_symmetric_difference(a, b, mc_fallback_samples, rng)
        return est


def points_in_polygon(points, polygon, chunk=262_144):
    """Even-odd (ray casting) membership test, independent of shapely.

    points: (M, 2) array. Returns a boolean array of length M. Points on an
    edge may land on either side; the Monte-Carlo caller only needs almost-
    sure correctness.
    """
    pts = np.asarray(points, dtype=float)
    v = polygon.vertices
    x1, y1 = v[:, 0], v[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    dx, dy = x2 - x1, y2 - y1
    out = np.empty(len(pts), dtype=bool)
    for lo in range(0, len(pts), chunk):
        px = pts[lo : lo + chunk, 0][:, None]
        py = pts[lo : lo + chunk, 1][:, None]
        straddles = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = x1 + dx * (py - y1) / dy
        hits = straddles & (px < xcross)
        out[lo : lo + chunk] = np.count_nonzero(hits, axis=1) % 2 == 1
    return out


def monte_carlo_symmetric_difference(poly1, poly2, samples, rng=None):
    """Monte-Carlo estimate of the symmetric-difference area.

    Uniform samples over the joint bounding box; returns (estimate,
    standard_error) from the binomial variance of the hit fraction.
    """
    rng = np.random.default_rng(rng)
    lo = np.minimum(poly1.vertices.min(axis=0), poly2.vertices.min(axis=0))
    hi = np.maximum(poly1.vertices.max(axis=0), poly2.vertices.max(axis=0))
    box_area = float(np.prod(hi - lo))
    pts = rng.uniform(lo, hi, size=(samples, 2))
    inside = points_in_polygon(pts, poly1) ^ points_in_polygon(pts, poly2)
    p = np.count_nonzero(inside) / samples
    return box_area * p, box_area * np.sqrt(p * (1.0 - p) / samples)


def write_polygon_csv(polygon, path):
    """Write vertices as a CSV with header x,y (17 significant digits)."""
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for x, y in polygon.vertices:
            fh.write(f"{x:.17g},{y:.17g}\n")


def read_polygon_csv(path):
    """Read a polygon written by write_polygon_csv (header optional)."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                continue  # header line
    return Polygon(np.asarray(rows))
