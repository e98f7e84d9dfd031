# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled E-step kernels.

Both kernels evaluate the per-column Gaussian posterior of the complex model
``y_j = S x_j + n`` with per-entry prior variance ``g[:, j]`` and noise
variance ``s2`` through the Woodbury form on the small ``L x L`` system:

    C_j = S G_j S^H + s2 I = R R^H
    mu_j = G_j S^H C_j^{-1} y_j
    diag(Sigma_j) = g_j * (1 - ||R^{-1} s_n sqrt(g_nj)||^2)
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport zherk, ztrsm, zgemv, zgemm
from scipy.linalg.cython_lapack cimport zpotrf

cnp.import_array()


cdef int _factor(double complex[::1, :] B, double complex[::1, :] C, double s2) noexcept nogil:
    cdef int L = B.shape[0]
    cdef int N = B.shape[1]
    cdef int i, j, info = 0
    cdef double one = 1.0, zero = 0.0
    cdef char uplo = b'L'
    cdef char trans = b'N'
    zherk(&uplo, &trans, &L, &N, &one, &B[0, 0], &L, &zero, &C[0, 0], &L)
    for i in range(L):
        C[i, i] = C[i, i] + s2
    zpotrf(&uplo, &L, &C[0, 0], &L, &info)
    return info


cdef void _lower_solve(double complex[::1, :] C, double complex *rhs, int ncol) noexcept nogil:
    cdef int L = C.shape[0]
    cdef double complex one = 1.0
    cdef char side = b'L'
    cdef char uplo = b'L'
    cdef char trans = b'N'
    cdef char diag = b'N'
    ztrsm(&side, &uplo, &trans, &diag, &L, &ncol, &one, &C[0, 0], &L, rhs, &L)


def e_step(const double complex[::1, :] S, const double complex[::1, :] Y,
           const double[::1, :] g, double s2):
    """Posterior means and marginal variances, one factorisation per column."""
    cdef int L = S.shape[0]
    cdef int N = S.shape[1]
    cdef int M = Y.shape[1]
    if Y.shape[0] != L or g.shape[0] != N or g.shape[1] != M:
        raise ValueError("inconsistent shapes")
    mu_arr = np.empty((N, M), dtype=np.complex128, order="F")
    phi_arr = np.empty((N, M), dtype=np.float64, order="F")
    cdef double complex[::1, :] mu = mu_arr
    cdef double[::1, :] phi = phi_arr
    cdef double complex[::1, :] B = np.empty((L, N), dtype=np.complex128, order="F")
    cdef double complex[::1, :] C = np.empty((L, L), dtype=np.complex128, order="F")
    cdef double complex[::1] z = np.empty(L, dtype=np.complex128)
    cdef double complex[::1] w = np.empty(N, dtype=np.complex128)
    cdef double[::1] root = np.empty(N, dtype=np.float64)
    cdef int i, n, j, info, inc = 1
    cdef double q, gn
    cdef double complex zone = 1.0, zzero = 0.0
    cdef char ctrans = b'C'
    with nogil:
        for j in range(M):
            for n in range(N):
                root[n] = sqrt(g[n, j])
                for i in range(L):
                    B[i, n] = S[i, n] * root[n]
            info = _factor(B, C, s2)
            if info != 0:
                break
            _lower_solve(C, &B[0, 0], N)
            for i in range(L):
                z[i] = Y[i, j]
            _lower_solve(C, &z[0], 1)
            zgemv(&ctrans, &L, &N, &zone, &B[0, 0], &L, &z[0], &inc, &zzero, &w[0], &inc)
            for n in range(N):
                q = 0.0
                for i in range(L):
                    q = q + B[i, n].real * B[i, n].real + B[i, n].imag * B[i, n].imag
                gn = g[n, j]
                mu[n, j] = root[n] * w[n]
                phi[n, j] = gn * (1.0 - q)
    if info != 0:
        raise FloatingPointError(f"posterior system not positive definite (column {j}, info {info})")
    return mu_arr, phi_arr


def e_step_shared(const double complex[::1, :] S, const double complex[::1, :] Y,
                  const double[::1] g, double s2):
    """Same posterior when every column shares one prior-variance vector."""
    cdef int L = S.shape[0]
    cdef int N = S.shape[1]
    cdef int M = Y.shape[1]
    if Y.shape[0] != L or g.shape[0] != N:
        raise ValueError("inconsistent shapes")
    cdef double complex[::1, :] B = np.empty((L, N), dtype=np.complex128, order="F")
    cdef double complex[::1, :] C = np.empty((L, L), dtype=np.complex128, order="F")
    Z_arr = np.array(Y, dtype=np.complex128, order="F")
    cdef double complex[::1, :] Z = Z_arr
    mu_arr = np.empty((N, M), dtype=np.complex128, order="F")
    cdef double complex[::1, :] mu = mu_arr
    phi_col = np.empty(N, dtype=np.float64)
    cdef double[::1] phi = phi_col
    cdef double[::1] root = np.empty(N, dtype=np.float64)
    cdef int i, n, j, info
    cdef double q
    cdef double complex zone = 1.0, zzero = 0.0
    cdef char ctrans = b'C'
    cdef char ntrans = b'N'
    with nogil:
        for n in range(N):
            root[n] = sqrt(g[n])
            for i in range(L):
                B[i, n] = S[i, n] * root[n]
        info = _factor(B, C, s2)
        if info == 0:
            _lower_solve(C, &B[0, 0], N)
            _lower_solve(C, &Z[0, 0], M)
            zgemm(&ctrans, &ntrans, &N, &M, &L, &zone, &B[0, 0], &L, &Z[0, 0], &L,
                  &zzero, &mu[0, 0], &N)
            for n in range(N):
                q = 0.0
                for i in range(L):
                    q = q + B[i, n].real * B[i, n].real + B[i, n].imag * B[i, n].imag
                phi[n] = g[n] * (1.0 - q)
                for j in range(M):
                    mu[n, j] = root[n] * mu[n, j]
    if info != 0:
        raise FloatingPointError(f"posterior system not positive definite (info {info})")
    return mu_arr, np.asfortranarray(np.repeat(phi_col[:, None], M, axis=1))
