"""Periodic uniform mesh of [0, 1] and discontinuous piecewise-polynomial fields.

A DG field stores one coefficient vector per cell in the orthonormal
Legendre basis; left/right one-sided limits at cell interfaces may differ.
All constructed objects are immutable (arrays are marked read-only) and can
be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import Basis, gauss_rule, _readonly
from .errors import MeshError


@dataclass(frozen=True)
class Mesh:
    """Uniform periodic partition of [0, 1] into ncells cells."""

    ncells: int
    h: float = field(init=False, compare=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.ncells
        if not (isinstance(n, (int, np.integer)) and n >= 3):
            raise MeshError(f"mesh needs an integer cell count >= 3, got {n!r}")
        object.__setattr__(self, "ncells", int(n))
        object.__setattr__(self, "h", 1.0 / n)
        object.__setattr__(self, "nodes", _readonly(np.arange(n + 1) / n))

    def cell_of(self, rho):
        """Cell index for parameter values in [0, 1] (1.0 maps to the last cell)."""
        rho = np.asarray(rho, dtype=float)
        return np.minimum((rho * self.ncells).astype(int), self.ncells - 1)

    def to_reference(self, rho, cells):
        """Map global parameters to reference coordinates of the given cells."""
        return (np.asarray(rho) - self.nodes[cells]) / self.h * 2.0 - 1.0


def make_mesh(ncells):
    """Uniform periodic mesh with nodes j/ncells; requires ncells >= 3."""
    return Mesh(ncells)


class _FieldBase:
    """Shared evaluation machinery for scalar/vector DG fields."""

    def eval_ref(self, x):
        """Evaluate on every cell at reference coordinates x in [-1, 1].

        Returns (ncells, ..., len(x)) with the coefficient axes preserved.
        """
        phi, _ = self.basis.eval(np.asarray(x, dtype=float))
        return np.tensordot(self.coeffs, phi, axes=(-1, 0))

    def deriv_ref(self, x):
        """Parameter-space derivative at reference coordinates x."""
        _, dphi = self.basis.eval(np.asarray(x, dtype=float))
        return np.tensordot(self.coeffs, dphi, axes=(-1, 0)) * (2.0 / self.mesh.h)

    def traces(self):
        """One-sided limits at cell endpoints: (left values, right values).

        left[j] is the limit from inside cell j at rho_{j-1/2} (the '+'
        trace of that interface); right[j] the limit at rho_{j+1/2} (its
        '-' trace).
        """
        phiL, _ = self.basis.eval(np.array(-1.0))
        phiR, _ = self.basis.eval(np.array(1.0))
        return self.coeffs @ phiL, self.coeffs @ phiR

    def __call__(self, rho):
        """Evaluate at arbitrary parameters (within-cell; rho=1 uses the last cell)."""
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        cells = self.mesh.cell_of(rho)
        x = self.mesh.to_reference(rho, cells)
        phi, _ = self.basis.eval(x)  # (k+1, M)
        c = self.coeffs[cells]  # (M, [2,] k+1)
        return np.einsum("m...b,bm->m...", c, phi)


@dataclass(frozen=True)
class DGScalarField(_FieldBase):
    """Piecewise polynomial scalar field: coeffs shape (ncells, k+1)."""

    mesh: Mesh
    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=float)
        if c.shape != (self.mesh.ncells, self.basis.nfuncs):
            raise ValueError(f"scalar coeffs must have shape (N, k+1), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class DGVectorField(_FieldBase):
    """Piecewise polynomial planar vector field: coeffs shape (ncells, 2, k+1)."""

    mesh: Mesh
    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=float)
        if c.shape != (self.mesh.ncells, 2, self.basis.nfuncs):
            raise ValueError(f"vector coeffs must have shape (N, 2, k+1), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)


def l2_project(f, mesh, basis, n_q=None):
    """Cellwise L2 projection of a parameterized function into the DG space.

    f maps an array of parameters in [0, 1] to values of shape (M,) or
    (M, 2); the result is a DGScalarField or DGVectorField accordingly.
    Coefficients are computed by Gauss quadrature with n_q points per cell
    (default k+3, enough for smooth non-polynomial integrands).
    """
    n_q = basis.degree + 3 if n_q is None else n_q
    rule = gauss_rule(n_q)
    # quadrature parameters for every cell: (N, n_q)
    rho = mesh.nodes[:-1, None] + mesh.h * (rule.nodes[None, :] + 1.0) / 2.0
    vals = np.asarray(f(rho.ravel()), dtype=float)
    phi, _ = basis.eval(rule.nodes)  # (k+1, n_q)
    if vals.shape == (rho.size,):
        vals = vals.reshape(rho.shape)
        coeffs = np.einsum("jg,g,bg->jb", vals, rule.weights, phi)
        return DGScalarField(mesh, basis, coeffs)
    if vals.shape == (rho.size, 2):
        vals = vals.reshape(rho.shape + (2,))
        coeffs = np.einsum("jgc,g,bg->jcb", vals, rule.weights, phi)
        return DGVectorField(mesh, basis, coeffs)
    raise ValueError(
        f"l2_project: f must return shape (M,) or (M, 2) for M parameters, "
        f"got {vals.shape} for M={rho.size}"
    )
