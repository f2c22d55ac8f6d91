"""Periodic block-tridiagonal direct solves (the per-step hot kernel).

The reduced step system couples each cell only to its two neighbours plus
the periodic wrap, giving a block-tridiagonal matrix with two corner
blocks. Two interchangeable backends solve it:

* ``python``: scatter the non-corner blocks into LAPACK banded storage,
  solve with scipy.linalg.solve_banded, and fold the two corner blocks
  back in with a rank-2b Woodbury correction (one extra banded solve with
  2b right-hand sides, one small dense solve).
* ``compiled``: a Cython bordered block-Thomas elimination
  (ldgflow._kernels) that treats the last cell as the border unknown;
  O(N b^3) with small constants.

The active backend is chosen at import time; set LDGFLOW_KERNELS to
``python`` or ``compiled`` to force one.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg import solve_banded

from .errors import WellPosednessError

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_FORCED = os.environ.get("LDGFLOW_KERNELS", "auto").lower()
if _FORCED not in ("auto", "python", "compiled"):
    raise ValueError(f"LDGFLOW_KERNELS must be auto|python|compiled, got {_FORCED!r}")
if _FORCED == "compiled" and _compiled is None:
    raise ImportError("LDGFLOW_KERNELS=compiled but ldgflow._kernels is not built")

DEFAULT_BACKEND = "python" if _FORCED == "python" or _compiled is None else "compiled"


def available_backends():
    return ("python",) if _compiled is None else ("python", "compiled")


class BandedScatter:
    """Precomputed index map from (N, b, b) block arrays to banded storage.

    Banded layout per scipy: ab[u + i - j, j] = A[i, j] with
    l = u = 2b - 1. The corner blocks (cell 0 <- cell N-1 and
    cell N-1 <- cell 0) stay out of the band and are handled by the
    Woodbury correction.
    """

    def __init__(self, ncells, bs):
        self.ncells = ncells
        self.bs = bs
        self.n = ncells * bs
        self.band = 2 * bs - 1
        a = np.arange(bs)
        jj = np.arange(ncells)
        # rows i = j*bs + a, cols = ((j+d)*bs + b) for d in {-1, 0, +1}
        rows = (jj[:, None, None] * bs + a[:, None]).reshape(ncells, bs, 1)
        self._idx = {}
        for name, d in (("lower", -1), ("diag", 0), ("upper", 1)):
            cols = ((jj[:, None, None] + d) * bs + a[None, None, :]).reshape(
                ncells, 1, bs
            )
            r = np.broadcast_to(rows, (ncells, bs, bs))
            c = np.broadcast_to(cols, (ncells, bs, bs))
            band_row = self.band + r - c
            if d == -1:  # block j -> j-1: cell 0 couples to N-1 (corner)
                sel = slice(1, None)
            elif d == 1:  # block j -> j+1: cell N-1 couples to 0 (corner)
                sel = slice(0, ncells - 1)
            else:
                sel = slice(None)
            self._idx[name] = (band_row[sel].ravel(), c[sel].ravel(), sel)

    def build(self, lower, diag, upper):
        ab = np.zeros((2 * self.band + 1, self.n))
        for name, blocks in (("lower", lower), ("diag", diag), ("upper", upper)):
            br, c, sel = self._idx[name]
            ab[br, c] = blocks[sel].ravel()
        return ab


def solve_periodic_block_tridiag(lower, diag, upper, rhs, backend=None, pivot_tol=1e-13):
    """Solve the periodic block-tridiagonal system for one or more RHS.

    Row block j reads: lower[j] x_{j-1} + diag[j] x_j + upper[j] x_{j+1} =
    rhs[j] with indices mod N. Shapes: blocks (N, b, b), rhs (N, b) or
    (N, b, m). Returns the solution with the rhs shape. Raises
    WellPosednessError when the factorization detects a singular or
    near-singular matrix.
    """
    lower = np.ascontiguousarray(lower, dtype=float)
    diag = np.ascontiguousarray(diag, dtype=float)
    upper = np.ascontiguousarray(upper, dtype=float)
    rhs = np.ascontiguousarray(rhs, dtype=float)
    squeeze = rhs.ndim == 2
    if squeeze:
        rhs = rhs[:, :, None]
    ncells, bs = diag.shape[:2]
    if ncells < 3:
        raise ValueError("periodic block solve needs at least 3 cells")
    if backend is None:
        backend = DEFAULT_BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise WellPosednessError("compiled kernels requested but not built")
        x = np.empty_like(rhs)
        info = _compiled.solve_periodic_block_tridiag(
            lower, diag, upper, rhs, x, pivot_tol
        )
        if info != 0:
            raise WellPosednessError(
                f"singular or near-singular step matrix (pivot block {info - 1})"
            )
    elif backend == "python":
        x = _solve_banded_woodbury(lower, diag, upper, rhs, pivot_tol)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return x[:, :, 0] if squeeze else x


_SCATTER_CACHE = {}


def _scatter_for(ncells, bs):
    key = (ncells, bs)
    if key not in _SCATTER_CACHE:
        if len(_SCATTER_CACHE) > 64:
            _SCATTER_CACHE.clear()
        _SCATTER_CACHE[key] = BandedScatter(ncells, bs)
    return _SCATTER_CACHE[key]


def _solve_banded_woodbury(lower, diag, upper, rhs, pivot_tol):
    # Near-singularity shows up as LinAlgError here or as a large residual
    # in the caller; LAPACK's banded LU does not expose pivot magnitudes.
    ncells, bs, m = rhs.shape
    n = ncells * bs
    scatter = _scatter_for(ncells, bs)
    ab = scatter.build(lower, diag, upper)
    band = scatter.band
    # corner correction A = B + U V^T, rank 2b
    width = 2 * bs
    U = np.zeros((n, width))
    U[:bs, :bs] = np.eye(bs)
    U[n - bs :, bs:] = np.eye(bs)
    VT = np.zeros((width, n))
    VT[:bs, n - bs :] = lower[0]
    VT[bs:, :bs] = upper[-1]
    B = np.concatenate([rhs.reshape(n, m), U], axis=1)
    try:
        Z = solve_banded((band, band), ab, B)
        z, Y = Z[:, :m], Z[:, m:]
        cap = np.eye(width) + VT @ Y
        correction = np.linalg.solve(cap, VT @ z)
    except np.linalg.LinAlgError as exc:
        raise WellPosednessError(f"step matrix factorization failed: {exc}") from exc
    x = z - Y @ correction
    return x.reshape(ncells, bs, m)
