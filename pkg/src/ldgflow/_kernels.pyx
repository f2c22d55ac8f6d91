# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled periodic block-tridiagonal solver (bordered block-Thomas).

The last block unknown is the border: the chain of cells 0..N-2 is
eliminated forward while carrying a spike column for the couplings into
the border cell, then one b x b solve closes the periodic wrap. Pivot
blocks are factorized with LAPACK dgetrf; a pivot magnitude at or below
pivot_tol times the block scale reports near-singularity via the return
code (1 + failing block index).
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm
from scipy.linalg.cython_lapack cimport dgetrf, dgetrs

cnp.import_array()


cdef inline void matmul_sub(double* out, const double* a, const double* b,
                            int n, int m) noexcept nogil:
    # out -= a @ b with a (n x n), b/out (n x m), all row-major.
    # Row-major data read column-major is the transpose, so compute
    # out^T += (-1) b^T a^T via dgemm on the raw pointers.
    cdef char trans = b'N'
    cdef double alpha = -1.0, beta = 1.0
    dgemm(&trans, &trans, &m, &n, &n, &alpha, <double*>b, &m, <double*>a, &n,
          &beta, out, &m)


cdef inline int factor_solve(double* piv, int* ipiv, double* bundle, int bs,
                             int width, double pivot_tol) noexcept nogil:
    # LU-factor piv (bs x bs row-major) in place and solve piv @ X = B for
    # `width` right-hand sides stored as bundle rows (bundle[c, :] is RHS
    # column c, i.e. column-major for LAPACK). Row-major data is the
    # transpose for LAPACK, so getrf factors piv^T and getrs(trans='T')
    # solves piv @ X = B; solutions overwrite the bundle rows.
    cdef int info = 0, i
    cdef int n = bs, nrhs = width
    cdef char trans = b'T'
    cdef double scale = 0.0, a
    for i in range(bs * bs):
        a = piv[i] if piv[i] >= 0 else -piv[i]
        if a > scale:
            scale = a
    if scale == 0.0:
        return -1
    dgetrf(&n, &n, piv, &n, ipiv, &info)
    if info != 0:
        return -1
    for i in range(bs):
        a = piv[i * bs + i]
        if a < 0:
            a = -a
        if a <= pivot_tol * scale:
            return -1
    dgetrs(&trans, &n, &nrhs, piv, &n, ipiv, bundle, &n, &info)
    if info != 0:
        return -1
    return 0


cdef int _solve(const double[:, :, ::1] lower, const double[:, :, ::1] diag,
                const double[:, :, ::1] upper, const double[:, :, ::1] rhs,
                double[:, :, ::1] out,
                double[:, :, ::1] W, double[:, :, ::1] Z, double[:, :, ::1] y,
                double[:, ::1] piv, double[:, ::1] bundle, int[::1] ipiv,
                double[:, ::1] utmp, double[:, ::1] vtmp, double[:, ::1] rtmp,
                double pivot_tol) noexcept nogil:
    cdef int N = diag.shape[0]
    cdef int bs = diag.shape[1]
    cdef int m = rhs.shape[2]
    cdef int nc = N - 1
    cdef int width = bs + bs + m
    cdef int j, i, l, r, info

    # ---- forward elimination over the chain ----
    for j in range(nc):
        for i in range(bs):
            for l in range(bs):
                piv[i, l] = diag[j, i, l]
                utmp[i, l] = upper[j, i, l] if j < nc - 1 else 0.0
                vtmp[i, l] = lower[0, i, l] if j == 0 else 0.0
            for r in range(m):
                rtmp[i, r] = rhs[j, i, r]
        if j == nc - 1:
            for i in range(bs):
                for l in range(bs):
                    vtmp[i, l] += upper[j, i, l]
        if j > 0:
            matmul_sub(&piv[0, 0], &lower[j, 0, 0], &W[j - 1, 0, 0], bs, bs)
            matmul_sub(&vtmp[0, 0], &lower[j, 0, 0], &Z[j - 1, 0, 0], bs, bs)
            matmul_sub(&rtmp[0, 0], &lower[j, 0, 0], &y[j - 1, 0, 0], bs, m)
        # bundle columns [W | Z | y], stored transposed for LAPACK
        for i in range(bs):
            for l in range(bs):
                bundle[l, i] = utmp[i, l]
                bundle[bs + l, i] = vtmp[i, l]
            for r in range(m):
                bundle[2 * bs + r, i] = rtmp[i, r]
        info = factor_solve(&piv[0, 0], &ipiv[0], &bundle[0, 0], bs, width,
                            pivot_tol)
        if info != 0:
            return j + 1
        for i in range(bs):
            for l in range(bs):
                W[j, i, l] = bundle[l, i]
                Z[j, i, l] = bundle[bs + l, i]
            for r in range(m):
                y[j, i, r] = bundle[2 * bs + r, i]

    # ---- back substitution: y_j -> x~_j, Z_j -> Z^_j ----
    for j in range(nc - 2, -1, -1):
        matmul_sub(&y[j, 0, 0], &W[j, 0, 0], &y[j + 1, 0, 0], bs, m)
        matmul_sub(&Z[j, 0, 0], &W[j, 0, 0], &Z[j + 1, 0, 0], bs, bs)

    # ---- border solve: cell N-1 couples to chain cells nc-1 and 0 ----
    for i in range(bs):
        for l in range(bs):
            piv[i, l] = diag[nc, i, l]
        for r in range(m):
            rtmp[i, r] = rhs[nc, i, r]
    matmul_sub(&piv[0, 0], &lower[nc, 0, 0], &Z[nc - 1, 0, 0], bs, bs)
    matmul_sub(&piv[0, 0], &upper[nc, 0, 0], &Z[0, 0, 0], bs, bs)
    matmul_sub(&rtmp[0, 0], &lower[nc, 0, 0], &y[nc - 1, 0, 0], bs, m)
    matmul_sub(&rtmp[0, 0], &upper[nc, 0, 0], &y[0, 0, 0], bs, m)
    for i in range(bs):
        for r in range(m):
            bundle[r, i] = rtmp[i, r]
    info = factor_solve(&piv[0, 0], &ipiv[0], &bundle[0, 0], bs, m, pivot_tol)
    if info != 0:
        return N
    for i in range(bs):
        for r in range(m):
            out[nc, i, r] = bundle[r, i]
            rtmp[i, r] = bundle[r, i]

    # ---- fill chain: x_j = x~_j - Z^_j x_border ----
    for j in range(nc):
        for i in range(bs):
            for r in range(m):
                out[j, i, r] = y[j, i, r]
        matmul_sub(&out[j, 0, 0], &Z[j, 0, 0], &rtmp[0, 0], bs, m)
    return 0


def solve_periodic_block_tridiag(double[:, :, ::1] lower,
                                 double[:, :, ::1] diag,
                                 double[:, :, ::1] upper,
                                 double[:, :, ::1] rhs,
                                 double[:, :, ::1] out,
                                 double pivot_tol):
    """Solve the cyclic block-tridiagonal system; returns 0 or 1+bad block."""
    cdef int N = diag.shape[0]
    cdef int bs = diag.shape[1]
    cdef int m = rhs.shape[2]
    cdef int width = 2 * bs + m

    W_np = np.zeros((N - 1, bs, bs))
    Z_np = np.zeros((N - 1, bs, bs))
    y_np = np.zeros((N - 1, bs, m))
    piv_np = np.zeros((bs, bs))
    bundle_np = np.zeros((width, bs))
    ipiv_np = np.zeros(bs, dtype=np.intc)
    utmp_np = np.zeros((bs, bs))
    vtmp_np = np.zeros((bs, bs))
    rtmp_np = np.zeros((bs, m))

    cdef double[:, :, ::1] W = W_np
    cdef double[:, :, ::1] Z = Z_np
    cdef double[:, :, ::1] y = y_np
    cdef double[:, ::1] piv = piv_np
    cdef double[:, ::1] bundle = bundle_np
    cdef int[::1] ipiv = ipiv_np
    cdef double[:, ::1] utmp = utmp_np
    cdef double[:, ::1] vtmp = vtmp_np
    cdef double[:, ::1] rtmp = rtmp_np
    cdef int status

    with nogil:
        status = _solve(lower, diag, upper, rhs, out, W, Z, y, piv, bundle,
                        ipiv, utmp, vtmp, rtmp, pivot_tol)
    return status
