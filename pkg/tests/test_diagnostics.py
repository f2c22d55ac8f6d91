import numpy as np
import pytest

from ldgflow import Basis, initial_curve, make_mesh
from ldgflow.anisotropy import AnisotropyModel
from ldgflow.diagnostics import (
    CSV_HEADER,
    DiagnosticsCollector,
    discrete_energy,
    enclosed_area,
    mesh_ratio,
    sample_polygon,
    tangential_velocity,
    write_records_csv,
)
from ldgflow.errors import GeometryError
from ldgflow.mesh import DGVectorField
from ldgflow.solver import FlowParams, initial_state, step_apcsf
from test_solver import square_curve

ISO = AnisotropyModel.isotropic()


def test_energy_unit_circle_perimeter():
    # fine high-order projection: W1 integrates to the circle perimeter
    mesh, basis = make_mesh(40), Basis(4)
    state = initial_state(initial_curve("circle"), mesh, basis)
    wc, w1, w2 = discrete_energy(state, ISO, alpha=1.0 / mesh.h)
    assert abs(w1 - 2 * np.pi) <= 1e-10
    assert w2 <= 1e-20
    assert wc == pytest.approx(w1 + w2)


def test_energy_ellipse_perimeter_oracle():
    # independent oracle: adaptive quadrature of the analytic speed
    from scipy.integrate import quad

    perimeter, _ = quad(
        lambda d: np.hypot(2 * np.sin(d), np.cos(d)), 0.0, 2 * np.pi, limit=200
    )
    assert abs(perimeter - 9.6884) <= 2e-4  # recorded reference value
    mesh, basis = make_mesh(80), Basis(1)
    state = initial_state(initial_curve("ellipse"), mesh, basis)
    _, w1, _ = discrete_energy(state, ISO, alpha=1.0 / mesh.h)
    assert abs(w1 - perimeter) / perimeter <= 1e-3


def test_energy_continuous_field_has_no_jump_part():
    mesh, basis = make_mesh(4), Basis(1)
    state = initial_state(square_curve, mesh, basis)
    _, _, w2 = discrete_energy(state, ISO, alpha=1.0 / mesh.h)
    assert w2 <= 1e-20


def test_energy_requires_positive_speed():
    from ldgflow.errors import PositivityError

    mesh, basis = make_mesh(4), Basis(1)
    state = initial_state(square_curve, mesh, basis)
    from dataclasses import replace

    dead = replace(
        state, tangent=DGVectorField(mesh, basis, np.zeros((4, 2, 2)))
    )
    with pytest.raises(PositivityError):
        discrete_energy(dead, ISO, alpha=1.0)


def test_area_unit_square_exact():
    mesh, basis = make_mesh(4), Basis(1)
    state = initial_state(square_curve, mesh, basis)
    assert abs(enclosed_area(state) - 1.0) <= 1e-14


def test_area_circle_and_ellipse():
    state = initial_state(initial_curve("circle"), make_mesh(40), Basis(2))
    assert abs(enclosed_area(state) - np.pi) <= 1e-6
    state = initial_state(initial_curve("ellipse"), make_mesh(80), Basis(1))
    assert abs(enclosed_area(state) - 2 * np.pi) <= 1e-4


def test_mesh_ratio_circle_unity():
    state = initial_state(initial_curve("circle"), make_mesh(80), Basis(1))
    assert abs(mesh_ratio(state) - 1.0) <= 1e-10


def test_mesh_ratio_ellipse_matches_chord_oracle():
    # direct chord computation on the analytic parameterization
    n = 80
    d = 2 * np.pi * np.arange(n + 1) / n
    pts = np.column_stack([2 * np.cos(d), np.sin(d)])
    chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    expect = chords.max() / chords.min()
    state = initial_state(initial_curve("ellipse"), make_mesh(n), Basis(1))
    assert abs(mesh_ratio(state) - expect) / expect <= 0.05
    assert abs(expect - 2.0) <= 0.1


def test_mesh_ratio_rigid_motion_invariant(rng):
    from dataclasses import replace

    state = initial_state(initial_curve("ellipse"), make_mesh(20), Basis(1))
    angle = rng.uniform(0, 2 * np.pi)
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    coeffs = np.einsum("ab,jbp->jap", R, state.position.coeffs)
    coeffs[:, :, 0] += np.sqrt(2.0) * rng.uniform(-3, 3, 2)[None, :]
    moved = replace(state, position=DGVectorField(state.mesh, state.basis, coeffs))
    assert abs(mesh_ratio(moved) - mesh_ratio(state)) <= 1e-12


def test_mesh_ratio_degenerate_cell():
    from dataclasses import replace

    state = initial_state(initial_curve("circle"), make_mesh(8), Basis(1))
    coeffs = np.array(state.position.coeffs)
    coeffs[3, :, 1:] = 0.0  # constant cell: zero chord
    broken = replace(state, position=DGVectorField(state.mesh, state.basis, coeffs))
    with pytest.raises(GeometryError):
        mesh_ratio(broken)


def test_sample_polygon_count_and_midpoints():
    mesh, basis = make_mesh(5), Basis(1)
    state = initial_state(initial_curve("circle"), mesh, basis)
    poly = sample_polygon(state, 300)
    assert len(poly.vertices) == 5 * 300 + 5
    # continuous field: interface value equals the one-sided trace
    sq = initial_state(square_curve, make_mesh(4), Basis(1))
    poly = sample_polygon(sq, 2)
    left, _ = sq.position.traces()
    corners = poly.vertices[:: 3]  # every cell starts with its interface point
    assert np.abs(np.sort(corners, axis=0) - np.sort(left, axis=0)).max() <= 1e-13


def test_sample_polygon_radial_accuracy():
    state = initial_state(initial_curve("circle"), make_mesh(80), Basis(1))
    poly = sample_polygon(state, 300)
    radii = np.linalg.norm(poly.vertices, axis=1)
    assert np.abs(radii - 1.0).max() <= 1e-3


def test_sample_polygon_validation():
    state = initial_state(initial_curve("circle"), make_mesh(8), Basis(1))
    with pytest.raises(ValueError):
        sample_polygon(state, 1)


def test_area_matches_polygon_shoelace():
    # enclosed_area agrees with the sampled polygon's area at second order
    # in the sampling density
    state = initial_state(initial_curve("ellipse"), make_mesh(40), Basis(2))
    exact = enclosed_area(state)
    errs = [abs(sample_polygon(state, ppc).area - exact) for ppc in (50, 100)]
    assert errs[1] <= errs[0] / 3.0  # ~(50/100)^2


def test_tangential_velocity_translation():
    from dataclasses import replace

    mesh, basis = make_mesh(16), Basis(2)
    state = initial_state(initial_curve("ellipse"), mesh, basis)
    shift = np.array([0.3, -0.7])
    coeffs = np.array(state.position.coeffs)
    coeffs[:, :, 0] += np.sqrt(2.0) * shift[None, :]
    moved = replace(state, position=DGVectorField(mesh, basis, coeffs))
    vt = tangential_velocity(state, moved, tau=1.0)
    # expected: shift . unit tangent, evaluated pointwise
    from ldgflow.basis import gauss_rule

    rule = gauss_rule(basis.degree + 3)
    qv = state.tangent.eval_ref(rule.nodes)
    expect = (shift[0] * qv[:, 0, :] + shift[1] * qv[:, 1, :]) / np.hypot(
        qv[:, 0, :], qv[:, 1, :]
    )
    got = vt.eval_ref(rule.nodes)
    assert np.abs(got - expect).max() <= 1e-12


def test_tangential_velocity_shrinking_circle():
    # purely radial motion: tangential component at projection accuracy
    from ldgflow.curves import shrinking_circle

    mesh, basis = make_mesh(80), Basis(4)
    a = initial_state(lambda r: shrinking_circle(0.0, r), mesh, basis)
    b = initial_state(lambda r: shrinking_circle(1e-3, r), mesh, basis)
    vt = tangential_velocity(a, b, tau=1e-3)
    assert np.abs(vt.eval_ref(np.linspace(-1, 1, 5))).max() <= 1e-8


def test_tangential_velocity_penalty_ablation():
    # with the penalty on, the first-step tangential velocity is flatter
    mesh, basis = make_mesh(80), Basis(1)
    spreads = {}
    for alpha in (None, 0.0):  # None resolves to 1/h
        params = FlowParams(flow="apcsf", tau=1e-3, alpha=alpha)
        s0 = initial_state(initial_curve("ellipse"), mesh, basis, params)
        s1 = step_apcsf(s0, params)
        vals = tangential_velocity(s0, s1, 1e-3).eval_ref(np.linspace(-1, 1, 5))
        spreads[alpha] = float(vals.max() - vals.min())
    assert spreads[None] < spreads[0.0]


def test_records_and_csv(tmp_path):
    mesh, basis = make_mesh(20), Basis(1)
    params = FlowParams(flow="apcsf", tau=1e-3)
    state = initial_state(initial_curve("ellipse"), mesh, basis, params)
    collector = DiagnosticsCollector(params.anisotropy, params.resolve_alpha(mesh))
    rec0 = collector.observe(state)
    assert rec0.dA == 0.0
    state = step_apcsf(state, params)
    rec1 = collector.observe(state)
    for rec in (rec0, rec1):
        assert rec.Wc == pytest.approx(rec.W1 + rec.W2, rel=1e-12)
        assert rec.Psi >= 1.0
    path = tmp_path / "series.csv"
    write_records_csv(collector.records, path)
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    # 17-significant-digit decimals round-trip
    assert float(lines[1].split(",")[1]) == rec0.Wc
