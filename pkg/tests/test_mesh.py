import numpy as np
import pytest

from ldgflow.basis import Basis
from ldgflow.errors import MeshError
from ldgflow.mesh import DGScalarField, DGVectorField, l2_project, make_mesh


def test_make_mesh_nodes():
    m = make_mesh(5)
    assert np.allclose(m.nodes, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0], atol=1e-16)
    assert m.h == 0.2


def test_make_mesh_too_small():
    with pytest.raises(MeshError):
        make_mesh(2)


def test_make_mesh_paper_resolution():
    assert make_mesh(80).h == 0.0125


def test_project_constants():
    mesh, basis = make_mesh(7), Basis(2)

    def f(rho):
        rho = np.asarray(rho)
        return np.column_stack([np.full(rho.shape, 2.0), np.full(rho.shape, 1.0)])

    field = l2_project(f, mesh, basis)
    assert isinstance(field, DGVectorField)
    vals = field(np.linspace(0, 1, 33))
    assert np.abs(vals - [2.0, 1.0]).max() <= 1e-14


def test_project_reproduces_polynomials():
    mesh, basis = make_mesh(4), Basis(1)
    field = l2_project(lambda r: np.asarray(r), mesh, basis)
    assert isinstance(field, DGScalarField)
    rho = np.linspace(0, 1, 101)
    assert np.abs(field(rho) - rho).max() <= 1e-14


def test_project_sine_halving_ratio():
    # direct evaluation against the analytic function; k=2 so the max error
    # contracts by about 2^3 per mesh halving
    basis = Basis(2)
    errs = []
    for n in (20, 40):
        field = l2_project(lambda r: np.sin(2 * np.pi * np.asarray(r)), make_mesh(n), basis)
        rho = np.linspace(0, 1, 2001)
        errs.append(np.abs(field(rho) - np.sin(2 * np.pi * rho)).max())
    ratio = errs[0] / errs[1]
    assert 2**2.8 <= ratio <= 2**3.2


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_projection_idempotent(k, rng):
    mesh, basis = make_mesh(6), Basis(k)
    coeffs = rng.standard_normal((6, k + 1))
    field = DGScalarField(mesh, basis, coeffs)
    again = l2_project(field, mesh, basis)
    assert np.abs(again.coeffs - coeffs).max() <= 1e-13


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_projection_l2_order(k):
    # cellwise L2 error behaves like h^(k+1) (observed order within 0.2)
    from ldgflow.basis import gauss_rule

    basis = Basis(k)
    rule = gauss_rule(k + 4)
    errs = []
    for n in (8, 16):
        mesh = make_mesh(n)
        field = l2_project(lambda r: np.sin(2 * np.pi * np.asarray(r)), mesh, basis)
        rho = mesh.nodes[:-1, None] + mesh.h * (rule.nodes[None, :] + 1) / 2
        diff = field.eval_ref(rule.nodes) - np.sin(2 * np.pi * rho)
        err2 = mesh.h / 2 * np.sum(rule.weights * diff**2)
        errs.append(np.sqrt(err2))
    order = np.log2(errs[0] / errs[1])
    assert abs(order - (k + 1)) <= 0.2


def test_traces_and_interface_jumps(rng):
    mesh, basis = make_mesh(5), Basis(3)
    coeffs = rng.standard_normal((5, 2, 4))
    field = DGVectorField(mesh, basis, coeffs)
    left, right = field.traces()
    # compare against direct evaluation just inside the endpoints
    eps = 1e-9
    inner_left = field(mesh.nodes[:-1] + eps)
    inner_right = field(mesh.nodes[1:] - eps)
    assert np.abs(left - inner_left).max() <= 1e-6
    assert np.abs(right - inner_right).max() <= 1e-6


def test_field_shape_validation():
    mesh, basis = make_mesh(4), Basis(1)
    with pytest.raises(ValueError):
        DGScalarField(mesh, basis, np.zeros((4, 3)))
    with pytest.raises(ValueError):
        DGVectorField(mesh, basis, np.zeros((4, 2, 3)))


def test_coefficients_are_immutable():
    mesh, basis = make_mesh(4), Basis(1)
    field = DGScalarField(mesh, basis, np.zeros((4, 2)))
    with pytest.raises(ValueError):
        field.coeffs[0, 0] = 1.0
