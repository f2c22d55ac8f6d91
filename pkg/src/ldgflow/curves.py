"""Analytic initial curves, the exact shrinking circle, and reference runs.

All evaluators map parameters rho in [0, 1] to points via the angle
delta = 2*pi*rho. The four named curves are the standard test set: the unit
circle, the 2:1 ellipse, a six-petal 'flower', and the highly non-convex
'Mikula' curve. Tabulated custom curves are interpolated with a periodic
cubic spline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CurveDefinitionError, ExtinctionError

_SPEED_SAMPLES = 10_000


@dataclass(frozen=True)
class CurveSpec:
    """A closed parameterized curve: rho in [0, 1] -> R^2 (vectorized)."""

    kind: str
    params: dict
    evaluator: Callable

    def __post_init__(self):
        ends = np.asarray(self.evaluator(np.array([0.0, 1.0])), dtype=float)
        if np.linalg.norm(ends[0] - ends[1]) > 1e-12:
            raise CurveDefinitionError(f"curve '{self.kind}' is not 1-periodic")
        rho = np.linspace(0.0, 1.0, _SPEED_SAMPLES, endpoint=False)
        pts = np.asarray(self.evaluator(rho), dtype=float)
        speed = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1) * _SPEED_SAMPLES
        if not np.all(speed > 0):
            raise CurveDefinitionError(
                f"curve '{self.kind}' has vanishing parameterization speed"
            )

    def __call__(self, rho):
        return self.evaluator(rho)


def _circle(radius):
    def f(rho):
        d = 2.0 * np.pi * np.asarray(rho, dtype=float)
        return np.column_stack([radius * np.cos(d), radius * np.sin(d)])

    return f


def _ellipse(a, b):
    def f(rho):
        d = 2.0 * np.pi * np.asarray(rho, dtype=float)
        return np.column_stack([a * np.cos(d), b * np.sin(d)])

    return f


def _ellipse_uniform(a, b, table_size=8192):
    """Arc-length (uniform-speed) parameterization of the ellipse.

    The angle delta(rho) is obtained by inverting the cumulative arclength
    on a dense table; the periodic residual delta - 2*pi*rho is stored as a
    periodic cubic spline, keeping the evaluator smooth.
    """
    from scipy.interpolate import CubicSpline, PchipInterpolator

    d = np.linspace(0.0, 2.0 * np.pi, table_size + 1)
    speed = np.hypot(a * np.sin(d), b * np.cos(d))
    s = np.concatenate(
        [[0.0], np.cumsum((speed[1:] + speed[:-1]) / 2.0 * (d[1] - d[0]))]
    )
    delta_of_rho = PchipInterpolator(s / s[-1], d)
    rho_grid = np.linspace(0.0, 1.0, table_size + 1)
    g = delta_of_rho(rho_grid) - 2.0 * np.pi * rho_grid
    g[-1] = g[0]
    spline = CubicSpline(rho_grid, g, bc_type="periodic")

    def f(rho):
        rho = np.asarray(rho, dtype=float)
        d = 2.0 * np.pi * rho + spline(np.remainder(rho, 1.0))
        return np.column_stack([a * np.cos(d), b * np.sin(d)])

    return f


def _flower():
    def f(rho):
        d = 2.0 * np.pi * np.asarray(rho, dtype=float)
        r = 2.0 + np.cos(6.0 * d)
        return np.column_stack([r * np.cos(d), r * np.sin(d)])

    return f


def _mikula():
    def f(rho):
        d = 2.0 * np.pi * np.asarray(rho, dtype=float)
        x = 2.0 * np.cos(d)
        y = 2.0 * (
            0.7 * np.sin(d)
            + np.sin(np.cos(d))
            + 0.25
            * (
                1.0
                - np.cos(2.0 * d)
                + 0.5 * np.cos(4.0 * d)
                - np.cos(6.0 * d)
                + 0.5 * np.cos(8.0 * d)
            )
        )
        return np.column_stack([x, y])

    return f


def initial_curve(kind, **params):
    """Named initial curve: circle | ellipse | flower | mikula.

    circle takes radius (default 1); ellipse takes semi-axes a (default 2)
    and b (default 1) plus speed='standard' (the (a cos, b sin) angle
    parameterization, initial mesh ratio ~ a/b) or speed='uniform'
    (arc-length parameterization, initial mesh ratio ~ 1).
    """
    if kind == "circle":
        radius = float(params.pop("radius", 1.0))
        ev = _circle(radius)
        params = {"radius": radius}
    elif kind == "ellipse":
        a = float(params.pop("a", 2.0))
        b = float(params.pop("b", 1.0))
        speed = params.pop("speed", "standard")
        if speed == "standard":
            ev = _ellipse(a, b)
        elif speed == "uniform":
            ev = _ellipse_uniform(a, b)
        else:
            raise CurveDefinitionError(
                f"ellipse speed must be 'standard' or 'uniform', got {speed!r}"
            )
        params = {"a": a, "b": b, "speed": speed}
    elif kind == "flower":
        ev = _flower()
        params = {}
    elif kind == "mikula":
        ev = _mikula()
        params = {}
    else:
        raise CurveDefinitionError(f"unknown curve kind {kind!r}")
    return CurveSpec(kind, params, ev)


def curve_from_table(rho, x, y):
    """Custom curve from tabulated (rho, x, y) samples.

    rho must be strictly increasing within [0, 1); a periodic cubic spline
    closes the curve through the wrap point.
    """
    from scipy.interpolate import CubicSpline

    rho = np.asarray(rho, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if rho.ndim != 1 or len(rho) < 4:
        raise CurveDefinitionError("tabulated curve needs >= 4 samples")
    if not (np.all(np.diff(rho) > 0) and rho[0] >= 0 and rho[-1] < 1):
        raise CurveDefinitionError("rho must be strictly increasing within [0, 1)")
    knots = np.append(rho, rho[0] + 1.0)
    pts = np.column_stack([np.append(x, x[0]), np.append(y, y[0])])
    spline = CubicSpline(knots, pts, bc_type="periodic")

    def ev(r):
        r = np.asarray(r, dtype=float)
        return spline(rho[0] + np.remainder(r - rho[0], 1.0))

    return CurveSpec("custom", {"samples": len(rho)}, ev)


def load_curve_csv(path):
    """Read a tabulated curve CSV of rho,x,y rows (header optional)."""
    rows = []
    with open(path) as fh:
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) < 3:
                continue
            try:
                rows.append(tuple(float(p) for p in parts[:3]))
            except ValueError:
                continue  # header
    if not rows:
        raise CurveDefinitionError(f"no data rows in {path}")
    arr = np.asarray(rows)
    return curve_from_table(arr[:, 0], arr[:, 1], arr[:, 2])


def shrinking_circle(t, rho):
    """Exact isotropic evolution of the unit circle: radius sqrt(1 - 2t).

    Valid for 0 <= t < 0.5; the circle vanishes at t = 0.5.
    """
    if t >= 0.5:
        raise ExtinctionError(f"circle is extinct at t = {t} (extinction at 0.5)")
    d = 2.0 * np.pi * np.asarray(rho, dtype=float)
    r = np.sqrt(1.0 - 2.0 * t)
    return np.column_stack([r * np.cos(d), r * np.sin(d)])


def reference_solution(
    spec,
    params,
    ref_ncells,
    ref_degree,
    ref_tau,
    study_ncells=None,
    points_per_cell=50,
):
    """High-resolution run used as the truth curve when no exact solution exists.

    Runs the same scheme on a much finer mesh / smaller time step and
    returns the sampled polygon at the final time. The reference resolution
    must strictly dominate the study: pass study_ncells to have that
    checked. The returned polygon uses points_per_cell samples per cell
    (the reference mesh is fine enough that 50 is far below the study
    errors).
    """
    from dataclasses import replace

    from .basis import Basis
    from .diagnostics import sample_polygon
    from .mesh import make_mesh
    from .solver import initial_state, run

    if study_ncells is not None and ref_ncells <= max(study_ncells):
        raise ValueError(
            f"reference mesh ({ref_ncells}) must exceed every study mesh "
            f"({sorted(study_ncells)})"
        )
    if ref_tau >= params.tau:
        raise ValueError(f"reference tau ({ref_tau}) must be below study tau")
    ref_params = replace(params, tau=ref_tau)
    mesh = make_mesh(ref_ncells)
    basis = Basis(ref_degree)
    state = initial_state(spec, mesh, basis, ref_params)
    final = run(state, ref_params)
    return sample_polygon(final, points_per_cell)
