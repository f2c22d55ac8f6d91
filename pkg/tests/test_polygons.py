import numpy as np
import pytest

from conftest import make_star_polygon
from ldgflow.errors import GeometryError
from ldgflow.polygons import (
    Polygon,
    manifold_distance,
    monte_carlo_symmetric_difference,
    points_in_polygon,
    read_polygon_csv,
    shoelace_area,
    write_polygon_csv,
)

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_shoelace_square():
    assert shoelace_area(SQUARE) == 1.0
    assert shoelace_area(SQUARE[::-1]) == -1.0


def test_polygon_normalizes_orientation():
    poly = Polygon(SQUARE[::-1])
    assert poly.input_clockwise
    assert poly.area == 1.0
    assert not Polygon(SQUARE).input_clockwise


def test_polygon_validation():
    with pytest.raises(GeometryError):
        Polygon(SQUARE[:2])
    with pytest.raises(GeometryError):
        Polygon(np.array([[0, 0], [1, np.nan], [1, 1]]))


def test_polygon_drops_closing_duplicate():
    poly = Polygon(np.vstack([SQUARE, SQUARE[:1]]))
    assert len(poly.vertices) == 4


def test_cleanup_removes_consecutive_duplicates():
    verts = np.vstack([SQUARE[:1], SQUARE[:1] + 1e-16, SQUARE[1:]])
    cleaned = Polygon(verts).cleaned()
    assert len(cleaned.vertices) == 4


def test_manifold_distance_identity():
    p = Polygon(SQUARE)
    assert manifold_distance(p, p) <= 1e-12


def test_manifold_distance_shifted_squares():
    p = Polygon(SQUARE)
    q = p.translated([0.5, 0.0])
    assert abs(manifold_distance(p, q) - 1.0) <= 1e-12


def test_manifold_distance_symmetry(rng):
    a = make_star_polygon(rng, 30)
    b = make_star_polygon(rng, 40, center=(0.3, -0.2))
    d1 = manifold_distance(a, b)
    d2 = manifold_distance(b, a)
    assert abs(d1 - d2) <= 1e-12


def test_manifold_distance_lower_bound(rng):
    for _ in range(10):
        a = make_star_polygon(rng, 25)
        b = make_star_polygon(rng, 35, center=(0.2, 0.1))
        assert manifold_distance(a, b) >= abs(a.area - b.area) - 1e-12


def test_manifold_distance_detects_vertex_perturbation():
    p = Polygon(SQUARE)
    verts = SQUARE.copy()
    verts[2] += 1e-6
    assert manifold_distance(p, Polygon(verts)) > 0


def test_manifold_distance_rejects_nonsimple():
    bowtie = Polygon(np.array([[0, 0], [1, 1], [1, 0], [0, 1.0]]))
    with pytest.raises(GeometryError):
        manifold_distance(bowtie, Polygon(SQUARE))


def test_matches_monte_carlo_oracle(rng):
    # the clipping backend against the independent sampling estimate
    for _ in range(4):
        a = make_star_polygon(rng, 50)
        b = make_star_polygon(rng, 50, center=(0.4, -0.3))
        exact = manifold_distance(a, b)
        est, se = monte_carlo_symmetric_difference(a, b, 1_000_000, rng)
        assert abs(exact - est) <= 3.0 * se


def test_points_in_polygon_against_shapely(rng):
    import shapely

    poly = make_star_polygon(rng, 40)
    pts = rng.uniform(-1.6, 1.6, size=(4000, 2))
    mine = points_in_polygon(pts, poly)
    ref = shapely.contains_xy(shapely.Polygon(poly.vertices), pts[:, 0], pts[:, 1])
    # boundary-grazing points may differ; none are expected at random
    assert np.mean(mine != ref) < 1e-3


def test_csv_roundtrip(tmp_path, rng):
    poly = make_star_polygon(rng, 12)
    path = tmp_path / "poly.csv"
    write_polygon_csv(poly, path)
    back = read_polygon_csv(path)
    assert np.array_equal(back.vertices, poly.vertices)


def test_scaled_rotated_translated():
    p = Polygon(SQUARE)
    assert abs(p.scaled(2.0).area - 4.0) <= 1e-12
    assert abs(p.rotated(0.3).area - 1.0) <= 1e-12
    assert abs(p.translated([5, -7]).area - 1.0) <= 1e-12
