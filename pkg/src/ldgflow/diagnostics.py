"""Quantitative observables of an evolution.

Raw quantities only: discrete energy and its volume/jump split, enclosed
area, relative area loss, mesh ratio, the sampled polygon representation
and the tangential velocity. Normalizations other than the area loss are
left to the CLI layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._assembly import ElementOps
from .errors import GeometryError, PositivityError
from .mesh import DGScalarField
from .polygons import Polygon


def _speed_at_quad(state, ops, q_floor=0.0):
    qq = np.einsum("jcb,bg->jcg", state.tangent.coeffs, ops.phi)
    Q = np.hypot(qq[:, 0, :], qq[:, 1, :])
    if np.min(Q) <= q_floor:
        raise PositivityError(
            f"parameterization speed {Q.min():.3e} at a quadrature point is at "
            f"or below the positivity floor {q_floor:.3e}"
        )
    return qq, Q


def discrete_energy(state, model, alpha, n_q=None):
    """Total discrete energy and its split (W_c, W_1, W_2).

    W_1 integrates gamma(theta) |q| over the parameter domain; W_2 is
    alpha/2 times the squared position jumps over all interfaces.
    """
    ops = ElementOps(state.mesh, state.basis, n_q)
    qq, Q = _speed_at_quad(state, ops)
    theta = np.arctan2(qq[:, 1, :], qq[:, 0, :])
    gam, _, _ = model.evaluate(theta)
    w1 = float(state.mesh.h / 2.0 * np.sum(ops.rule.weights * gam * Q))
    left, right = state.position.traces()  # (N, 2) each
    jumps = np.roll(left, -1, axis=0) - right  # X^+ - X^- at rho_{j+1/2}
    w2 = float(alpha / 2.0 * np.sum(jumps**2))
    return w1 + w2, w1, w2


def enclosed_area(state, n_q=None):
    """Enclosed area: sum over cells of int x dy/drho drho (exact quadrature)."""
    ops = ElementOps(state.mesh, state.basis, n_q)
    xs = np.einsum("jb,bg->jg", state.position.coeffs[:, 0, :], ops.phi)
    dys = np.einsum("jb,bg->jg", state.position.coeffs[:, 1, :], ops.dphi)
    # reference derivative: the h/2 volume scale cancels against 2/h
    return float(np.sum(ops.rule.weights * xs * dys))


def cell_chords(state):
    """Per-cell chord vectors between the cell's own endpoint traces."""
    left, right = state.position.traces()
    return right - left


def mesh_ratio(state):
    """Mesh ratio: max over min of per-cell chord lengths (>= 1).

    An exactly degenerate cell (chord below 1e-15 of the largest) raises
    GeometryError; legitimately extreme ratios from strong anisotropy pass
    through.
    """
    lengths = np.linalg.norm(cell_chords(state), axis=1)
    mx = float(lengths.max())
    mn = float(lengths.min())
    if mn < 1e-15 * mx:
        raise GeometryError(
            f"degenerate cell: min chord {mn:.3e} vs max {mx:.3e}"
        )
    return mx / mn


def sample_polygon(state, points_per_cell=300):
    """Polygon representation of the position field.

    Per cell: the interface value (midpoint of the two one-sided traces at
    the cell's left interface) followed by points_per_cell uniformly spaced
    interior samples; concatenated over cells into one closed polygon with
    ncells * (points_per_cell + 1) vertices.
    """
    if points_per_cell < 2:
        raise ValueError(f"points_per_cell must be >= 2, got {points_per_cell}")
    n = state.mesh.ncells
    left, right = state.position.traces()  # (N, 2)
    midpoints = 0.5 * (left + np.roll(right, 1, axis=0))  # interface rho_{j-1/2}
    x = -1.0 + 2.0 * (np.arange(points_per_cell) + 1.0) / (points_per_cell + 1.0)
    interior = state.position.eval_ref(x)  # (N, 2, ppc)
    verts = np.empty((n, points_per_cell + 1, 2))
    verts[:, 0, :] = midpoints
    verts[:, 1:, :] = np.moveaxis(interior, 1, 2)
    return Polygon(verts.reshape(-1, 2))


def tangential_velocity(prev, next_state, tau, n_q=None):
    """Velocity component along the old unit tangent, projected into V_h.

    Evaluates ((X_next - X_prev)/tau) . q_prev/|q_prev| at the volume
    quadrature points and L2-projects the result cellwise.
    """
    if prev.mesh != next_state.mesh or prev.basis != next_state.basis:
        raise ValueError("states must share one mesh and basis")
    ops = ElementOps(prev.mesh, prev.basis, n_q)
    qq, Q = _speed_at_quad(prev, ops)
    dX = (next_state.position.coeffs - prev.position.coeffs) / tau
    vel = np.einsum("jcb,bg->jcg", dX, ops.phi)
    vt = (vel[:, 0, :] * qq[:, 0, :] + vel[:, 1, :] * qq[:, 1, :]) / Q
    coeffs = np.einsum("jg,g,bg->jb", vt, ops.rule.weights, ops.phi)
    return DGScalarField(prev.mesh, prev.basis, coeffs)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of the per-step observable stream (raw values plus area loss)."""

    t: float
    Wc: float
    W1: float
    W2: float
    A: float
    dA: float
    Psi: float


CSV_HEADER = "t,Wc,W1,W2,A,dA,Psi"


class DiagnosticsCollector:
    """Builds DiagnosticsRecords along a run, anchored at the first state."""

    def __init__(self, model, alpha, n_q=None):
        self.model = model
        self.alpha = alpha
        self.n_q = n_q
        self.records = []
        self._area0 = None

    def observe(self, state):
        wc, w1, w2 = discrete_energy(state, self.model, self.alpha, self.n_q)
        area = enclosed_area(state, self.n_q)
        if self._area0 is None:
            self._area0 = area
        rec = DiagnosticsRecord(
            t=state.time,
            Wc=wc,
            W1=w1,
            W2=w2,
            A=area,
            dA=(area - self._area0) / self._area0,
            Psi=mesh_ratio(state),
        )
        self.records.append(rec)
        return rec


def write_records_csv(records, path):
    """Raw record stream as CSV (17 significant digits)."""
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.t:.17g},{r.Wc:.17g},{r.W1:.17g},{r.W2:.17g},"
                f"{r.A:.17g},{r.dA:.17g},{r.Psi:.17g}\n"
            )
