"""Orthonormal Legendre basis and Gauss-Legendre quadrature on [-1, 1].

The DG space uses Legendre polynomials normalized so that
``integral(phi_i * phi_j, [-1, 1]) = delta_ij``; every cell mass matrix is
then a multiple of the identity, which keeps the elementwise solves in the
scheme explicit. Gauss nodes are computed by Newton iteration on P_n, so no
tabulated rules are needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DEGREE = 4
MAX_QUAD_POINTS = 20


def legendre_all(k, x):
    """Values and derivatives of P_0..P_k at points x.

    Uses the three-term recurrence for values and
    P'_{i+1} = P'_{i-1} + (2i+1) P_i for derivatives (stable at x = +-1).

    Returns
    -------
    (P, dP) : arrays of shape (k+1,) + x.shape
    """
    x = np.asarray(x, dtype=float)
    P = np.zeros((k + 1,) + x.shape)
    dP = np.zeros_like(P)
    P[0] = 1.0
    if k >= 1:
        P[1] = x
        dP[1] = 1.0
    for i in range(1, k):
        P[i + 1] = ((2 * i + 1) * x * P[i] - i * P[i - 1]) / (i + 1)
        dP[i + 1] = dP[i - 1] + (2 * i + 1) * P[i]
    return P, dP


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature nodes/weights on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", _readonly(self.nodes))
        object.__setattr__(self, "weights", _readonly(self.weights))

    @property
    def npoints(self):
        return self.nodes.size


def gauss_rule(n):
    """n-point Gauss-Legendre rule on [-1, 1], exact for degree <= 2n-1.

    Nodes are the roots of P_n obtained by Newton iteration (tolerance
    1e-15, symmetrized about 0); weights are 2 / ((1-x^2) P_n'(x)^2).
    """
    if not 1 <= n <= MAX_QUAD_POINTS:
        raise ValueError(f"gauss_rule: need 1 <= n <= {MAX_QUAD_POINTS}, got {n}")
    if n == 1:
        return QuadratureRule(np.array([0.0]), np.array([2.0]))
    i = np.arange(n)
    x = np.cos(np.pi * (i + 0.75) / (n + 0.5))
    for _ in range(100):
        P, dP = legendre_all(n, x)
        dx = P[n] / dP[n]
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    # enforce exact antisymmetry of the root set
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])
    _, dP = legendre_all(n, x)
    w = 2.0 / ((1.0 - x**2) * dP[n] ** 2)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w)


@dataclass(frozen=True)
class Basis:
    """Orthonormalized Legendre basis of degree k on [-1, 1]."""

    degree: int
    scale: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 1 <= self.degree <= MAX_DEGREE:
            raise ValueError(
                f"Basis: degree must be in [1, {MAX_DEGREE}], got {self.degree}"
            )
        s = np.sqrt((2 * np.arange(self.degree + 1) + 1) / 2.0)
        object.__setattr__(self, "scale", _readonly(s))

    @property
    def nfuncs(self):
        return self.degree + 1

    def eval(self, x):
        """Evaluate (phi_i(x), phi_i'(x)) for i = 0..k.

        Returns two arrays of shape (k+1,) + x.shape. x must lie in [-1, 1]
        (not checked; out-of-range input is a contract violation).
        """
        P, dP = legendre_all(self.degree, x)
        s = self.scale.reshape((-1,) + (1,) * (P.ndim - 1))
        return s * P, s * dP


def basis_eval(basis, x):
    """Functional alias for Basis.eval."""
    return basis.eval(x)
