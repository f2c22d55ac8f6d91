"""Element-level assembly of the semi-implicit LDG step.

Unknowns per cell and time level: potential mu (scalar), position X,
tangent q = dX/drho and flux xi = G(theta) q / |q| (planar vectors), all in
the degree-k DG space. One step freezes the geometry factors (|q|, theta,
the unnormalized normal) at the old level and solves a linear system for
the new level. The interface fluxes are X-hat = X^+ and
xi-hat = xi^- + alpha (X^+ - X^-).

Two equivalent realizations are provided:

* ``StepOperator`` - the production path. The mu, q and xi unknowns are
  eliminated cellwise (their equations are local and their cell matrices
  are invertible whenever |q| > 0), leaving a periodic block-tridiagonal
  system in the position coefficients alone; q, xi, mu are reconstructed
  afterwards. The elimination is exact block Gaussian elimination, so the
  result matches the full system to roundoff.
* ``assemble_full_system`` - the full 7-field block-sparse matrix in the
  cell-major unknown order (mu, X1, X2, q1, q2, xi1, xi2). Kept as the
  verification oracle and for structural checks; the area-preserving flow
  adds a rank-one term (returned separately).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import gauss_rule
from .blocksolve import solve_periodic_block_tridiag
from .errors import PositivityError

__all__ = [
    "ElementOps",
    "LevelData",
    "StepOperator",
    "StepSystem",
    "assemble_full_system",
    "split_full_vector",
]


class ElementOps:
    """Reference-element operators shared by every step on one mesh/basis.

    S[a,b] = integral(phi_b phi_a') over [-1,1]; eL/eR are endpoint values.
    D, T realize the discrete derivative q_j = (2/h)(D X_j + T X_{j+1});
    E = -D^T and F = -T^T are their adjoints appearing in the flux rows
    (the discrete integration-by-parts identity S + S^T = eR eR^T - eL eL^T
    makes these exact, which is what the energy-dissipation structure of
    the scheme rests on).
    """

    def __init__(self, mesh, basis, n_q=None):
        if n_q is None:
            n_q = basis.degree + 3
        if n_q < basis.degree + 1:
            raise ValueError(
                f"volume quadrature needs at least k+1 points, got {n_q}"
            )
        self.mesh = mesh
        self.basis = basis
        self.n_q = n_q
        self.rule = gauss_rule(n_q)
        self.phi, self.dphi = basis.eval(self.rule.nodes)  # (P, nq)
        eL, _ = basis.eval(np.array(-1.0))
        eR, _ = basis.eval(np.array(1.0))
        self.eL, self.eR = eL, eR
        w = self.rule.weights
        self.S = np.einsum("g,bg,ag->ab", w, self.phi, self.dphi)
        self.D = -self.S - np.outer(eL, eL)
        self.T = np.outer(eR, eL)
        self.E = -self.D.T
        self.F = -self.T.T
        # (nq, P*P) table turning pointwise weights into Gram matrices by
        # one matmul: gram[j] = (h/2) * weights[j, :] @ phi_outer
        P = basis.nfuncs
        self.phi_outer = (
            w[:, None] * (self.phi[:, None, :] * self.phi[None, :, :]).reshape(P * P, n_q).T
        )
        self.phi_w = (w * self.phi).T  # (nq, P)

    @property
    def P(self):
        return self.basis.nfuncs

    def derivative_coeffs(self, coeffs):
        """Discrete derivative of a (vector) field: the q induced by X.

        coeffs: (N, ..., P) cell-major DG coefficients; returns the same
        shape. Exact on globally continuous piecewise polynomials.
        """
        nxt = np.roll(coeffs, -1, axis=0)
        return (2.0 / self.mesh.h) * (
            np.einsum("ab,j...b->j...a", self.D, coeffs)
            + np.einsum("ab,j...b->j...a", self.T, nxt)
        )


@dataclass
class LevelData:
    """Old-level geometry at the volume quadrature points plus Gram matrices.

    A[a,b] = int Q phi_a phi_b, B1/B2 the same with the unnormalized normal
    components (-q2, q1), Cg/Cgp with gamma/Q and gamma'/Q. w_cell[a] =
    int Q phi_a (per cell) and length = sum int Q drho (the weight of the
    discrete average used by the area-preserving flow).
    """

    Q: np.ndarray
    theta: np.ndarray
    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    Cg: np.ndarray
    Cgp: np.ndarray
    w_cell: np.ndarray
    length: float


def level_data(ops, tangent_coeffs, model, q_floor=0.0):
    """Evaluate the frozen step coefficients from the old tangent field.

    Raises PositivityError if |q| fails the positivity floor at any volume
    quadrature point (hard error by design: flooring would silently break
    the well-posedness hypothesis and corrupt convergence).
    """
    qq = np.matmul(tangent_coeffs, ops.phi)  # (N, 2, nq)
    Q = np.hypot(qq[:, 0, :], qq[:, 1, :])
    qmin = float(Q.min())
    if qmin <= q_floor:
        raise PositivityError(
            f"parameterization speed {qmin:.3e} at a quadrature point is at or "
            f"below the positivity floor {q_floor:.3e}"
        )
    theta = np.arctan2(qq[:, 1, :], qq[:, 0, :])
    gam, dgam, _ = model.evaluate(theta)
    half_h = ops.mesh.h / 2.0
    ncells, nq = Q.shape
    P = ops.P
    # all five Gram families in one matmul against the phi-outer table
    weights = np.stack([Q, -qq[:, 1, :], qq[:, 0, :], gam / Q, dgam / Q])
    grams = half_h * (weights.reshape(5 * ncells, nq) @ ops.phi_outer)
    A, B1, B2, Cg, Cgp = grams.reshape(5, ncells, P, P)
    w_cell = half_h * (Q @ ops.phi_w)
    length = float(half_h * np.sum(ops.rule.weights * Q))
    return LevelData(Q, theta, A, B1, B2, Cg, Cgp, w_cell, length)


def _penalty_blocks(ops, alpha):
    """Step-invariant penalty sub-blocks, cached on the ElementOps instance."""
    cache = getattr(ops, "_pen_cache", None)
    if cache is None:
        cache = {}
        ops._pen_cache = cache
    if alpha not in cache:
        eL, eR = ops.eL, ops.eR
        cache[alpha] = (
            alpha * np.outer(eR, eL),
            -alpha * (np.outer(eR, eR) + np.outer(eL, eL)),
            alpha * np.outer(eL, eR),
        )
    return cache[alpha]


@dataclass
class StepFields:
    """Solution of one linear step solve, as per-cell coefficient arrays."""

    mu: np.ndarray  # (N, P)
    X: np.ndarray  # (N, 2, P)
    q: np.ndarray
    xi: np.ndarray
    residual: float


class StepOperator:
    """Reduced (position-only) form of the step matrix for one time level."""

    def __init__(self, ops, level, tau, alpha, backend=None, pivot_tol=1e-13):
        self.ops = ops
        self.level = level
        self.tau = tau
        self.alpha = alpha
        self.backend = backend
        self.pivot_tol = pivot_tol
        self._build_blocks()

    def _build_blocks(self):
        ops, lv = self.ops, self.level
        P = ops.P
        h = ops.mesh.h
        N = ops.mesh.ncells
        c4 = 4.0 / h**2

        # mu elimination: MU[c,d] = -(1/tau) B_c A^{-1} B_d, as one batched
        # product of the stacked normal Grams
        Bstack = np.concatenate([lv.B1, lv.B2], axis=1)  # (N, 2P, P)
        KB = np.linalg.solve(lv.A, np.concatenate([lv.B1, lv.B2], axis=2))
        MU = -(1.0 / self.tau) * (Bstack @ KB)  # (N, 2P, 2P)

        # xi elimination: the E/F x {D,T} compositions for Cg and Cgp, fused
        # into wide batched products (DT = [D | T])
        E, F = ops.E, ops.F
        DT = np.concatenate([ops.D, ops.T], axis=1)  # (P, 2P)
        CDT_g = lv.Cg @ DT
        CDT_p = lv.Cgp @ DT
        E_g, F_g = E @ CDT_g, np.roll(F @ CDT_g, 1, axis=0)
        E_p, F_p = E @ CDT_p, np.roll(F @ CDT_p, 1, axis=0)
        ECgD, ECgT = E_g[:, :, :P], E_g[:, :, P:]
        FCgD_p, FCgT_p = F_g[:, :, :P], F_g[:, :, P:]
        ECpD, ECpT = E_p[:, :, :P], E_p[:, :, P:]
        FCpD_p, FCpT_p = F_p[:, :, :P], F_p[:, :, P:]

        bs = 2 * P
        L = np.zeros((N, bs, bs))
        Dg = np.empty((N, bs, bs))
        U = np.zeros((N, bs, bs))
        s0, s1 = slice(0, P), slice(P, bs)
        # C[0,0] = C[1,1] = Cg, C[0,1] = -Cgp, C[1,0] = +Cgp
        L[:, s0, s0] = c4 * FCgD_p
        L[:, s1, s1] = c4 * FCgD_p
        L[:, s0, s1] = -c4 * FCpD_p
        L[:, s1, s0] = c4 * FCpD_p
        U[:, s0, s0] = c4 * ECgT
        U[:, s1, s1] = c4 * ECgT
        U[:, s0, s1] = -c4 * ECpT
        U[:, s1, s0] = c4 * ECpT
        Dg[:] = MU
        Dg[:, s0, s0] += c4 * (ECgD + FCgT_p)
        Dg[:, s1, s1] += c4 * (ECgD + FCgT_p)
        Dg[:, s0, s1] += -c4 * (ECpD + FCpT_p)
        Dg[:, s1, s0] += c4 * (ECpD + FCpT_p)
        pen_up, pen_diag, pen_dn = _penalty_blocks(ops, self.alpha)
        for sl in (s0, s1):
            L[:, sl, sl] += pen_dn
            Dg[:, sl, sl] += pen_diag
            U[:, sl, sl] += pen_up
        self.blocks = (L, Dg, U)

    def x_rhs(self, ra):
        """Reduced right-hand side from (a)-row data ra, shape (N, P, m)."""
        lv = self.level
        Kra = np.linalg.solve(lv.A, ra)
        return np.concatenate([-(lv.B1 @ Kra), -(lv.B2 @ Kra)], axis=1)

    def solve(self, ra):
        """Solve the step system for (a)-row data ra of shape (N, P, m).

        All other equation groups are homogeneous (which covers both the
        flow right-hand side and the rank-one column of the area-preserving
        update). Returns a list of m StepFields.
        """
        ops, lv = self.ops, self.level
        P = ops.P
        h = ops.mesh.h
        rhs = self.x_rhs(ra)
        L, Dg, U = self.blocks
        X = solve_periodic_block_tridiag(
            L, Dg, U, rhs, backend=self.backend, pivot_tol=self.pivot_tol
        )  # (N, 2P, m)
        # relative residual of the reduced solves (conditioning diagnostic)
        ax = L @ np.roll(X, 1, axis=0) + Dg @ X + U @ np.roll(X, -1, axis=0)
        bnorm = np.abs(rhs).max()
        residual = float(np.abs(ax - rhs).max() / bnorm) if bnorm > 0 else 0.0

        X1, X2 = X[:, :P, :], X[:, P:, :]
        Xv = np.stack([X1, X2], axis=1)  # (N, 2, P, m)
        q = (2.0 / h) * (ops.D @ Xv + ops.T @ np.roll(Xv, -1, axis=0))
        xi1 = (2.0 / h) * (lv.Cg @ q[:, 0] - lv.Cgp @ q[:, 1])
        xi2 = (2.0 / h) * (lv.Cgp @ q[:, 0] + lv.Cg @ q[:, 1])
        xi = np.stack([xi1, xi2], axis=1)
        bx = lv.B1 @ X1 + lv.B2 @ X2
        mu = np.linalg.solve(lv.A, ra - bx / self.tau)
        m = ra.shape[2]
        return [
            StepFields(
                mu=mu[:, :, i],
                X=Xv[:, :, :, i],
                q=q[:, :, :, i],
                xi=xi[:, :, :, i],
                residual=residual,
            )
            for i in range(m)
        ]


@dataclass
class StepSystem:
    """Full block-sparse step system (verification/oracle surface).

    matrix couples cell j to cells j-1, j, j+1 (mod N) only; the
    area-preserving flow subtracts the rank-one matrix
    outer(rank_one_u, rank_one_v) / weight_total.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    rank_one_u: np.ndarray
    rank_one_v: np.ndarray
    weight_total: float


def _cell_offsets(P):
    # unknown order per cell: mu, X1, X2, q1, q2, xi1, xi2
    return {
        "mu": 0,
        "X1": P,
        "X2": 2 * P,
        "q1": 3 * P,
        "q2": 4 * P,
        "xi1": 5 * P,
        "xi2": 6 * P,
    }


def assemble_full_system(ops, level, tau, alpha, ra):
    """Assemble the 7N(k+1)-dimensional step system as a sparse matrix.

    ra is the (a)-row data of shape (N, P). Row groups are ordered to pair
    each equation with its natural unknown: (a)->mu, (b)->X, (d)->q,
    (c)->xi.
    """
    P = ops.P
    N = ops.mesh.ncells
    h = ops.mesh.h
    off = _cell_offsets(P)
    stride = 7 * P
    eye = np.eye(P)
    rows, cols, vals = [], [], []

    def add(j_row, row_field, j_col, col_field, block):
        r0 = (j_row % N) * stride + off[row_field]
        c0 = (j_col % N) * stride + off[col_field]
        rr, cc = np.meshgrid(np.arange(P), np.arange(P), indexing="ij")
        rows.append((r0 + rr).ravel())
        cols.append((c0 + cc).ravel())
        vals.append(np.broadcast_to(block, (P, P)).ravel())

    eL, eR, S = ops.eL, ops.eR, ops.S
    pen_up = alpha * np.outer(eR, eL)
    pen_dn = alpha * np.outer(eL, eR)
    pen_diag = -alpha * (np.outer(eR, eR) + np.outer(eL, eL))
    for j in range(N):
        # (a): A mu + (1/tau) B . X = ra
        add(j, "mu", j, "mu", level.A[j])
        add(j, "mu", j, "X1", level.B1[j] / tau)
        add(j, "mu", j, "X2", level.B2[j] / tau)
        Bs = {"X1": level.B1[j], "X2": level.B2[j]}
        C = {
            ("xi1", "q1"): level.Cg[j],
            ("xi1", "q2"): -level.Cgp[j],
            ("xi2", "q1"): level.Cgp[j],
            ("xi2", "q2"): level.Cg[j],
        }
        for c, (Xc, qc, xic) in enumerate(
            (("X1", "q1", "xi1"), ("X2", "q2", "xi2"))
        ):
            # (b): B mu + E xi_j + F xi_{j-1} + penalty jumps in X = 0
            add(j, Xc, j, "mu", Bs[Xc])
            add(j, Xc, j, xic, ops.E)
            add(j, Xc, j - 1, xic, ops.F)
            add(j, Xc, j + 1, Xc, pen_up)
            add(j, Xc, j, Xc, pen_diag)
            add(j, Xc, j - 1, Xc, pen_dn)
            # (d): (h/2) q - (D X_j + T X_{j+1}) = 0
            add(j, qc, j, qc, (h / 2.0) * eye)
            add(j, qc, j, Xc, -ops.D)
            add(j, qc, j + 1, Xc, -ops.T)
            # (c): (h/2) xi - C q = 0
            add(j, xic, j, xic, (h / 2.0) * eye)
            add(j, xic, j, "q1", -C[(xic, "q1")])
            add(j, xic, j, "q2", -C[(xic, "q2")])

    n = N * stride
    matrix = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    rhs = np.zeros(n)
    u = np.zeros(n)
    v = np.zeros(n)
    for j in range(N):
        rhs[j * stride : j * stride + P] = ra[j]
        u[j * stride : j * stride + P] = level.w_cell[j]
        v[j * stride : j * stride + P] = level.w_cell[j]
    return StepSystem(matrix, rhs, u, v, level.length)


def split_full_vector(x, N, P):
    """Split a full-system vector into (mu, X, q, xi) coefficient arrays."""
    x = x.reshape(N, 7 * P)
    mu = x[:, :P].copy()
    X = np.stack([x[:, P : 2 * P], x[:, 2 * P : 3 * P]], axis=1).copy()
    q = np.stack([x[:, 3 * P : 4 * P], x[:, 4 * P : 5 * P]], axis=1).copy()
    xi = np.stack([x[:, 5 * P : 6 * P], x[:, 6 * P : 7 * P]], axis=1).copy()
    return mu, X, q, xi
