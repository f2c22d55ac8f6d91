import numpy as np
import pytest

from ldgflow.blocksolve import (
    BandedScatter,
    available_backends,
    solve_periodic_block_tridiag,
)
from ldgflow.errors import WellPosednessError


def dense_from_blocks(L, D, U):
    n_cells, bs = D.shape[:2]
    n = n_cells * bs
    A = np.zeros((n, n))
    for j in range(n_cells):
        A[j * bs : (j + 1) * bs, ((j - 1) % n_cells) * bs : ((j - 1) % n_cells) * bs + bs] += L[j]
        A[j * bs : (j + 1) * bs, j * bs : (j + 1) * bs] += D[j]
        A[j * bs : (j + 1) * bs, ((j + 1) % n_cells) * bs : ((j + 1) % n_cells) * bs + bs] += U[j]
    return A


def random_system(rng, ncells, bs, nrhs):
    L = rng.standard_normal((ncells, bs, bs))
    D = rng.standard_normal((ncells, bs, bs)) + 6 * np.eye(bs)
    U = rng.standard_normal((ncells, bs, bs))
    R = rng.standard_normal((ncells, bs, nrhs))
    return L, D, U, R


@pytest.mark.parametrize("ncells,bs,nrhs", [(3, 2, 1), (4, 4, 2), (8, 10, 2), (40, 6, 1)])
def test_matches_dense_solve(backend, rng, ncells, bs, nrhs):
    L, D, U, R = random_system(rng, ncells, bs, nrhs)
    X = solve_periodic_block_tridiag(L, D, U, R, backend=backend)
    expect = np.linalg.solve(dense_from_blocks(L, D, U), R.reshape(-1, nrhs))
    assert np.abs(X.reshape(-1, nrhs) - expect).max() <= 1e-10


def test_single_rhs_shape(backend, rng):
    L, D, U, R = random_system(rng, 5, 3, 1)
    X = solve_periodic_block_tridiag(L, D, U, R[:, :, 0], backend=backend)
    assert X.shape == (5, 3)


def test_singular_matrix_raises(backend):
    ncells, bs = 4, 2
    L = np.zeros((ncells, bs, bs))
    U = np.zeros((ncells, bs, bs))
    D = np.stack([np.eye(bs)] * ncells)
    D[2] = 0.0  # one exactly singular uncoupled block
    R = np.ones((ncells, bs, 1))
    with pytest.raises(WellPosednessError):
        solve_periodic_block_tridiag(L, D, U, R, backend=backend)


def test_banded_scatter_reconstructs_matrix(rng):
    ncells, bs = 6, 3
    L, D, U, _ = random_system(rng, ncells, bs, 1)
    scatter = BandedScatter(ncells, bs)
    ab = scatter.build(L, D, U)
    band = scatter.band
    n = ncells * bs
    dense = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            row = band + i - j
            if 0 <= row < ab.shape[0]:
                dense[i, j] = ab[row, j]
    expect = dense_from_blocks(L, D, U)
    # corners are excluded from the band by design
    expect[:bs, -bs:] = 0.0
    expect[-bs:, :bs] = 0.0
    assert np.abs(dense - expect).max() == 0.0


def test_minimum_cell_count():
    with pytest.raises(ValueError):
        solve_periodic_block_tridiag(
            np.zeros((2, 2, 2)), np.zeros((2, 2, 2)), np.zeros((2, 2, 2)),
            np.zeros((2, 2, 1)),
        )


def test_backends_agree(rng):
    backends = available_backends()
    if len(backends) < 2:
        pytest.skip("compiled kernels not built")
    L, D, U, R = random_system(rng, 17, 8, 2)
    sols = [
        solve_periodic_block_tridiag(L, D, U, R, backend=b) for b in backends
    ]
    assert np.abs(sols[0] - sols[1]).max() <= 1e-11
