"""Anisotropic surface energy densities and Wulff equilibrium shapes.

The energy density gamma(theta) weights arclength in the interfacial
energy; theta is the angle between the outward normal n = (-sin t, cos t)
and the vertical axis. The built-in family is the l-fold density
gamma = 1 + beta*cos(l*theta). The sign of the surface stiffness
gamma + gamma'' splits the models into weak/marginal/strong anisotropy;
for the l-fold family the transition sits at beta = 1/(l^2 - 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import GeometryError

REGIME_TOL = 1e-10


def _reduce_angle(theta):
    """Reduce angles mod 2*pi into [-pi, pi]."""
    return np.remainder(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class AnisotropyModel:
    """Surface energy density with first and second derivatives.

    Use the ``lfold``/``isotropic``/``custom`` constructors. Custom models
    must provide analytic gamma'' up front; finite-differencing gamma is
    refused because the stiffness sign decides the flow regime.
    """

    kind: str
    beta: float = 0.0
    fold: int = 0
    _gamma: Optional[Callable] = None
    _dgamma: Optional[Callable] = None
    _d2gamma: Optional[Callable] = None

    @staticmethod
    def lfold(beta, fold):
        """gamma(theta) = 1 + beta*cos(fold*theta)."""
        beta = float(beta)
        fold = int(fold)
        if fold <= 0:
            raise ValueError(f"fold number must be a positive integer, got {fold}")
        if not abs(beta) < 1.0:
            raise ValueError(f"l-fold strength must satisfy |beta| < 1, got {beta}")
        return AnisotropyModel(kind="l-fold", beta=beta, fold=fold)

    @staticmethod
    def isotropic():
        """gamma identically 1."""
        return AnisotropyModel.lfold(0.0, 1)

    @staticmethod
    def custom(gamma, dgamma, d2gamma, samples=3600):
        """Model from analytic callables; validated for positivity/periodicity."""
        if gamma is None or dgamma is None or d2gamma is None:
            raise ValueError("custom anisotropy requires gamma, gamma' and gamma''")
        model = AnisotropyModel(
            kind="custom", _gamma=gamma, _dgamma=dgamma, _d2gamma=d2gamma
        )
        th = np.linspace(-np.pi, np.pi, samples)
        g, dg, _ = model.evaluate(th)
        if not np.all(g > 0):
            raise ValueError("surface energy density must be positive")
        if abs(g[0] - g[-1]) > 1e-12 or abs(dg[0] - dg[-1]) > 1e-12:
            raise ValueError("gamma and gamma' must be 2*pi-periodic to 1e-12")
        return model

    def evaluate(self, theta):
        """(gamma, gamma', gamma'') at angles theta (reduced internally)."""
        th = _reduce_angle(theta)
        if self.kind == "l-fold":
            lt = self.fold * th
            g = 1.0 + self.beta * np.cos(lt)
            dg = -self.beta * self.fold * np.sin(lt)
            d2g = -self.beta * self.fold**2 * np.cos(lt)
            return g, dg, d2g
        return (
            np.asarray(self._gamma(th), dtype=float),
            np.asarray(self._dgamma(th), dtype=float),
            np.asarray(self._d2gamma(th), dtype=float),
        )


def gamma_eval(model, theta):
    """Functional alias for AnisotropyModel.evaluate."""
    return model.evaluate(theta)


@dataclass(frozen=True)
class Regime:
    """Anisotropy classification with the sampled minimum stiffness."""

    label: str  # isotropic | weak | marginal | strong
    min_stiffness: float


def classify_regime(model, samples=3600):
    """Classify by the sign of min(gamma + gamma'') over a theta sample.

    Endpoint at the tolerance (|min| <= 1e-10) is labelled marginal; the
    isotropic label additionally requires gamma constant and gamma'' == 0.
    """
    if samples < 360:
        raise ValueError(f"classify_regime needs samples >= 360, got {samples}")
    th = np.linspace(-np.pi, np.pi, samples, endpoint=False)
    g, _, d2g = model.evaluate(th)
    stiffness = g + d2g
    mn = float(np.min(stiffness))
    if np.max(np.abs(d2g)) <= REGIME_TOL and np.ptp(g) <= REGIME_TOL:
        label = "isotropic"
    elif mn > REGIME_TOL:
        label = "weak"
    elif mn < -REGIME_TOL:
        label = "strong"
    else:
        label = "marginal"
    return Regime(label, mn)


def surface_energy_matrix(model, theta):
    """2x2 matrix [[g, -g'], [g', g]] at each angle; shape theta.shape + (2, 2)."""
    g, dg, _ = model.evaluate(theta)
    g = np.asarray(g)
    out = np.empty(g.shape + (2, 2))
    out[..., 0, 0] = g
    out[..., 0, 1] = -dg
    out[..., 1, 0] = dg
    out[..., 1, 1] = g
    return out


def wulff_envelope(model, samples):
    """Parametric envelope (x, y)(theta); self-intersects under strong anisotropy.

    x = -gamma*sin - gamma'*cos, y = gamma*cos - gamma'*sin, sampled on a
    uniform theta grid of the given size. Returns an (samples, 2) array.
    """
    th = np.linspace(-np.pi, np.pi, samples, endpoint=False)
    g, dg, _ = model.evaluate(th)
    x = -g * np.sin(th) - dg * np.cos(th)
    y = g * np.cos(th) - dg * np.sin(th)
    return np.column_stack([x, y])


def wulff_shape(model, samples, target_area):
    """Equilibrium shape: half-plane intersection, rescaled to target_area.

    The region {p : p . n(theta) <= gamma(theta) for all theta} is convex
    and its boundary is the envelope with the self-intersecting 'ears'
    removed. The half-planes are sampled on a uniform theta grid; the
    vertices of the intersection polygon are rescaled uniformly so the
    enclosed area matches target_area.
    """
    from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

    from .polygons import Polygon

    if samples < 64:
        raise ValueError(f"wulff_shape needs samples >= 64, got {samples}")
    if not target_area > 0:
        raise ValueError(f"target_area must be positive, got {target_area}")
    th = np.linspace(-np.pi, np.pi, samples, endpoint=False)
    g, _, _ = model.evaluate(th)
    # halfspace format: A p + b <= 0 with A = n(theta), b = -gamma
    halfspaces = np.column_stack([-np.sin(th), np.cos(th), -g])
    try:
        hs = HalfspaceIntersection(halfspaces, np.zeros(2))
        hull = ConvexHull(hs.intersections)
    except QhullError as exc:
        raise GeometryError(f"degenerate half-plane intersection: {exc}") from exc
    verts = hs.intersections[hull.vertices]
    poly = Polygon(verts)
    return poly.scaled(np.sqrt(target_area / poly.area))
