import numpy as np
import pytest

from ldgflow.basis import Basis, basis_eval, gauss_rule


def test_gauss_one_point():
    r = gauss_rule(1)
    assert r.nodes.tolist() == [0.0]
    assert r.weights.tolist() == [2.0]


def test_gauss_two_point():
    r = gauss_rule(2)
    assert np.allclose(r.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    assert np.allclose(r.weights, [1.0, 1.0], atol=1e-15)


def test_gauss_three_point_integrates_quartic():
    r = gauss_rule(3)
    val = np.sum(r.weights * r.nodes**4)
    assert abs(val - 2.0 / 5.0) <= 1e-14


@pytest.mark.parametrize("n", range(1, 21))
def test_gauss_exactness_and_weight_sum(n):
    r = gauss_rule(n)
    assert abs(np.sum(r.weights) - 2.0) <= 1e-14
    assert np.all(r.weights > 0)
    for p in range(2 * n):  # monomials of degree <= 2n-1
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert abs(np.sum(r.weights * r.nodes**p) - exact) <= 1e-13


@pytest.mark.parametrize("n", [0, 21, -3])
def test_gauss_point_count_range(n):
    with pytest.raises(ValueError):
        gauss_rule(n)


def test_basis_closed_forms_k1():
    b = Basis(1)
    vals, derivs = basis_eval(b, np.array(0.0))
    assert np.allclose(vals, [np.sqrt(0.5), 0.0], atol=1e-15)
    assert np.allclose(derivs, [0.0, np.sqrt(1.5)], atol=1e-15)
    vals, _ = b.eval(np.array(1.0))
    assert np.allclose(vals, [np.sqrt(0.5), np.sqrt(1.5)], atol=1e-15)


def test_basis_closed_form_k2_endpoint():
    vals, _ = Basis(2).eval(np.array(-1.0))
    assert abs(vals[2] - np.sqrt(2.5)) <= 1e-15


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_orthonormality_under_minimal_rule(k):
    b = Basis(k)
    r = gauss_rule(k + 1)
    phi, _ = b.eval(r.nodes)
    mass = np.einsum("g,ag,bg->ab", r.weights, phi, phi)
    assert np.abs(mass - np.eye(k + 1)).max() <= 1e-13


@pytest.mark.parametrize("k", [0, 5])
def test_degree_range(k):
    with pytest.raises(ValueError):
        Basis(k)


def test_derivative_recurrence_matches_finite_difference():
    b = Basis(4)
    x = np.linspace(-0.95, 0.95, 11)
    eps = 1e-6
    _, derivs = b.eval(x)
    vplus, _ = b.eval(x + eps)
    vminus, _ = b.eval(x - eps)
    fd = (vplus - vminus) / (2 * eps)
    assert np.abs(derivs - fd).max() <= 1e-8
