"""Semi-implicit time stepping for curve-shortening flows (CSF and AP-CSF).

Each step solves one linear system with the old-level geometry frozen; the
area-preserving variant subtracts the weighted average of the potential,
which is a rank-one modification handled by a Sherman-Morrison update (two
solves against the same factorized operator). Q = |q| must stay above a
positivity floor at every volume quadrature point throughout; violations
abort the run rather than being clamped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from dataclasses import replace as dataclasses_replace
from typing import Callable, Optional

import numpy as np

from ._assembly import ElementOps, StepOperator, level_data
from .anisotropy import AnisotropyModel
from .basis import Basis
from .errors import (
    DivergenceError,
    PositivityError,
    SingularUpdateError,
    SolverError,
    WellPosednessError,
)
from .mesh import DGScalarField, DGVectorField, Mesh, l2_project, make_mesh

FLOW_KINDS = ("csf", "apcsf")


def normal_angle(q, q_floor=0.0):
    """Angle theta in [-pi, pi] with q = |q| (cos theta, sin theta).

    Equivalently the angle between the outward normal (-sin, cos) direction
    -q-perp and the vertical axis (four-quadrant convention). q has shape
    (..., 2); raises PositivityError when |q| <= q_floor anywhere.
    """
    q = np.asarray(q, dtype=float)
    mag = np.hypot(q[..., 0], q[..., 1])
    if np.min(mag) <= q_floor:
        raise PositivityError("cannot take the angle of a vanishing tangent")
    return np.arctan2(q[..., 1], q[..., 0])


@dataclass(frozen=True)
class FlowParams:
    """Time-stepping parameters for one evolution.

    alpha=None resolves to the recommended penalty 1/h once the mesh is
    known; q_floor=None resolves to 1e-12 times the initial curve length.
    n_q=None uses k+3 volume quadrature points. residual_limit optionally
    turns the per-step relative-residual diagnostic into a hard failure
    (off by default: extreme-mesh-ratio regimes legitimately raise it).
    """

    flow: str = "csf"
    tau: float = 1e-3
    T: float = 0.25
    anisotropy: AnisotropyModel = field(default_factory=AnisotropyModel.isotropic)
    alpha: Optional[float] = None
    n_q: Optional[int] = None
    q_floor: Optional[float] = None
    pivot_tol: float = 1e-13
    residual_limit: Optional[float] = None
    backend: Optional[str] = None

    def __post_init__(self):
        if self.flow not in FLOW_KINDS:
            raise ValueError(f"flow must be one of {FLOW_KINDS}, got {self.flow!r}")
        if not self.tau > 0:
            raise ValueError(f"time step must be positive, got {self.tau}")
        if self.T < 0:
            raise ValueError(f"final time must be nonnegative, got {self.T}")
        if self.alpha is not None and self.alpha < 0:
            raise ValueError(f"penalty must be nonnegative, got {self.alpha}")

    def resolve_alpha(self, mesh):
        return 1.0 / mesh.h if self.alpha is None else float(self.alpha)


@dataclass(frozen=True)
class CurveState:
    """All DG fields of one time level (immutable snapshot).

    position X, tangent q = dX/drho, flux xi = G(theta) q/|q| and the
    scalar potential mu. residual records the relative residual of the
    linear solves that produced the state (None for projected initial
    data); it is a conditioning diagnostic, not part of the state proper.
    """

    time: float
    position: DGVectorField
    tangent: DGVectorField
    flux: DGVectorField
    potential: DGScalarField
    residual: Optional[float] = None

    def __post_init__(self):
        f0 = self.position
        for f in (self.tangent, self.flux, self.potential):
            if f.mesh != f0.mesh or f.basis != f0.basis:
                raise ValueError("all state fields must share one mesh and basis")

    @property
    def mesh(self):
        return self.position.mesh

    @property
    def basis(self):
        return self.position.basis


def curve_length(state, n_q=None):
    """Discrete curve length: sum over cells of int |q| drho."""
    ops = ElementOps(state.mesh, state.basis, n_q)
    qq = np.einsum("jcb,bg->jcg", state.tangent.coeffs, ops.phi)
    Q = np.hypot(qq[:, 0, :], qq[:, 1, :])
    return float(state.mesh.h / 2.0 * np.sum(ops.rule.weights * Q))


def initial_state(curve, mesh, basis, params=None):
    """Project an initial curve and derive the remaining fields.

    X is the cellwise L2 projection; q solves the discrete derivative
    equation with the X-hat = X^+ flux (exact on continuous piecewise
    polynomials); xi follows from its local definition at the derived
    angles; mu is zero (the scheme never reads the old potential).
    """
    params = params or FlowParams()
    ops = ElementOps(mesh, basis, params.n_q)
    X = l2_project(curve, mesh, basis, n_q=ops.n_q)
    if not isinstance(X, DGVectorField):
        raise ValueError("initial curve evaluator must return planar points")
    qc = ops.derivative_coeffs(X.coeffs)
    # resolve the positivity floor from the initial length, then enforce it
    qq = np.einsum("jcb,bg->jcg", qc, ops.phi)
    Q = np.hypot(qq[:, 0, :], qq[:, 1, :])
    length = float(mesh.h / 2.0 * np.sum(ops.rule.weights * Q))
    floor = params.q_floor if params.q_floor is not None else 1e-12 * length
    if not float(Q.min()) > floor:
        raise PositivityError(
            f"initial parameterization is degenerate: min |q| = {Q.min():.3e} "
            f"<= floor {floor:.3e}"
        )
    model = params.anisotropy
    lv = level_data(ops, qc, model, q_floor=floor)
    q_field = DGVectorField(mesh, basis, qc)
    xi1 = (2.0 / mesh.h) * (
        np.einsum("jab,jb->ja", lv.Cg, qc[:, 0]) - np.einsum("jab,jb->ja", lv.Cgp, qc[:, 1])
    )
    xi2 = (2.0 / mesh.h) * (
        np.einsum("jab,jb->ja", lv.Cgp, qc[:, 0]) + np.einsum("jab,jb->ja", lv.Cg, qc[:, 1])
    )
    xi = DGVectorField(mesh, basis, np.stack([xi1, xi2], axis=1))
    mu = DGScalarField(mesh, basis, np.zeros((mesh.ncells, basis.nfuncs)))
    return CurveState(0.0, X, q_field, xi, mu)


class Stepper:
    """Reusable stepping context for one (mesh, basis, params) combination."""

    def __init__(self, mesh, basis, params, q_floor):
        self.mesh = mesh
        self.basis = basis
        self.params = params
        self.q_floor = q_floor
        self.alpha = params.resolve_alpha(mesh)
        self.ops = ElementOps(mesh, basis, params.n_q)

    def step(self, state, dt=None):
        dt = self.params.tau if dt is None else dt
        ops = self.ops
        lv = level_data(ops, state.tangent.coeffs, self.params.anisotropy, self.q_floor)
        op = StepOperator(
            ops,
            lv,
            dt,
            self.alpha,
            backend=self.params.backend,
            pivot_tol=self.params.pivot_tol,
        )
        Xm = state.position.coeffs
        ra = (
            np.einsum("jab,jb->ja", lv.B1, Xm[:, 0])
            + np.einsum("jab,jb->ja", lv.B2, Xm[:, 1])
        ) / dt
        if self.params.flow == "csf":
            (sol,) = op.solve(ra[:, :, None])
        else:
            ra2 = np.stack([ra, lv.w_cell], axis=2)
            base, col = op.solve(ra2)
            vz = float(np.sum(lv.w_cell * base.mu))
            vy = float(np.sum(lv.w_cell * col.mu))
            denom = lv.length - vy
            if abs(denom) < 1e-14 * max(1.0, lv.length):
                raise SingularUpdateError(
                    f"area-preserving rank-one update is singular (denominator "
                    f"{denom:.3e})"
                )
            sol = _combine_rank_one(base, vz / denom, col)
        # the residual is a conditioning diagnostic; extreme mesh ratios under
        # strong anisotropy legitimately raise it, so it only aborts on request
        limit = self.params.residual_limit
        if limit is not None and sol.residual > limit:
            raise WellPosednessError(
                f"step solve residual {sol.residual:.3e} exceeds the requested "
                f"limit {limit:.3e}"
            )
        mesh, basis = self.mesh, self.basis
        return CurveState(
            time=state.time + dt,
            position=DGVectorField(mesh, basis, sol.X),
            tangent=DGVectorField(mesh, basis, sol.q),
            flux=DGVectorField(mesh, basis, sol.xi),
            potential=DGScalarField(mesh, basis, sol.mu),
            residual=sol.residual,
        )


def _combine_rank_one(base, factor, col):
    """Sherman-Morrison combination of the base solve and the rank-one column."""
    from ._assembly import StepFields

    return StepFields(
        mu=base.mu + factor * col.mu,
        X=base.X + factor * col.X,
        q=base.q + factor * col.q,
        xi=base.xi + factor * col.xi,
        residual=base.residual,
    )


def _resolved_floor(state, params):
    if params.q_floor is not None:
        return params.q_floor
    return 1e-12 * curve_length(state, params.n_q)


def step_csf(state, params):
    """One semi-implicit step of the curve-shortening flow."""
    params = replace(params, flow="csf")
    stepper = Stepper(state.mesh, state.basis, params, _resolved_floor(state, params))
    return stepper.step(state)


def step_apcsf(state, params):
    """One semi-implicit step of the area-preserving curve-shortening flow."""
    params = replace(params, flow="apcsf")
    stepper = Stepper(state.mesh, state.basis, params, _resolved_floor(state, params))
    return stepper.step(state)


def run(initial, params, observer: Optional[Callable] = None):
    """Advance from the initial state to t = T, calling observer per step.

    Full steps of size tau are taken while they fit; the last step is
    truncated to land on T exactly. On a step failure the error is raised
    with ``last_state``, ``step`` and ``time`` attributes set to the last
    valid snapshot.
    """
    if params.T <= initial.time:
        return initial
    stepper = Stepper(
        initial.mesh, initial.basis, params, _resolved_floor(initial, params)
    )
    # integer step plan: full steps of tau, then one truncated step landing
    # exactly on T (skipped when the remainder is pure roundoff)
    span = params.T - initial.time
    nfull = int(np.floor(span / params.tau + 1e-9))
    remainder = span - nfull * params.tau
    times = [initial.time + (m + 1) * params.tau for m in range(nfull)]
    if remainder > 1e-9 * params.tau:
        times.append(params.T)
    elif times:
        times[-1] = params.T
    state = initial
    for m, target in enumerate(times):
        try:
            new = stepper.step(state, target - state.time)
        except SolverError as exc:
            exc.last_state = state
            exc.step = m
            exc.time = state.time
            raise
        if not np.all(np.isfinite(new.position.coeffs)):
            exc = DivergenceError(f"non-finite coefficients at step {m + 1}")
            exc.last_state = state
            exc.step = m
            exc.time = state.time
            raise exc
        state = dataclasses_replace(new, time=target)  # keep times exact
        if observer is not None:
            observer(state)
    return state


def state_to_dict(state):
    """JSON-ready representation: mesh {N, k}, time, per-cell coefficients."""
    return {
        "mesh": {"N": state.mesh.ncells, "k": state.basis.degree},
        "time": state.time,
        "position": state.position.coeffs.tolist(),
        "tangent": state.tangent.coeffs.tolist(),
        "flux": state.flux.coeffs.tolist(),
        "potential": state.potential.coeffs.tolist(),
    }


def state_from_dict(data):
    mesh = make_mesh(data["mesh"]["N"])
    basis = Basis(data["mesh"]["k"])
    return CurveState(
        time=float(data["time"]),
        position=DGVectorField(mesh, basis, np.asarray(data["position"])),
        tangent=DGVectorField(mesh, basis, np.asarray(data["tangent"])),
        flux=DGVectorField(mesh, basis, np.asarray(data["flux"])),
        potential=DGScalarField(mesh, basis, np.asarray(data["potential"])),
    )


def save_state(state, path):
    """Write a snapshot as JSON; decimal floats round-trip bit-exactly."""
    with open(path, "w") as fh:
        json.dump(state_to_dict(state), fh)


def load_state(path):
    with open(path) as fh:
        return state_from_dict(json.load(fh))
