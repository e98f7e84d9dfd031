"""Posterior statistics of one measurement column and the batched E-step."""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg import cho_factor, cho_solve

BACKEND = "numpy"
if os.environ.get("CESBL_RA_BACKEND", "").lower() not in ("numpy", "python"):
    try:
        from ._kernels import e_step as _e_step, e_step_shared as _e_step_shared

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass
if BACKEND == "numpy":
    from ._fallback import e_step as _e_step, e_step_shared as _e_step_shared

from . import _fallback


def posterior_stats(A, y_col, gamma_col, sigma2):
    """Dense posterior of ``y = A x + n`` with precision prior ``diag(gamma)``.

    ``gamma_col`` may hold one precision per logical unknown (length
    ``A.shape[1] // 2``); it is then repeated for the imaginary half.
    Returns the posterior mean and the diagonal of the posterior covariance.
    """
    A = np.asarray(A, dtype=float)
    y_col = np.asarray(y_col, dtype=float)
    gamma_col = np.asarray(gamma_col, dtype=float)
    if gamma_col.shape[0] * 2 == A.shape[1]:
        gamma_col = np.concatenate([gamma_col, gamma_col])
    if gamma_col.shape[0] != A.shape[1] or y_col.shape[0] != A.shape[0]:
        raise ValueError("inconsistent dimensions")
    if np.any(gamma_col <= 0) or sigma2 <= 0:
        raise ValueError("precisions and noise variance must be positive")
    H = A.T @ A / sigma2 + np.diag(gamma_col)
    factor = cho_factor(H, lower=True)
    mu = cho_solve(factor, A.T @ y_col / sigma2)
    Omega = cho_solve(factor, np.eye(H.shape[0]))
    return mu, np.diag(Omega).copy()


def e_step(S, Y, var, s2, backend=None):
    """Posterior moments of all columns of the complex model.

    ``var`` is the per-real-component prior variance, either ``(N, M)`` or a
    shared ``(N,)`` vector; ``s2`` the per-real-component noise variance.
    Returns complex means ``(N, M)`` and real marginal variances ``(N, M)``.
    """
    S = np.asfortranarray(S, dtype=np.complex128)
    Y = np.asfortranarray(Y, dtype=np.complex128)
    var = np.asarray(var, dtype=np.float64)
    if backend == "numpy":
        mod_full, mod_shared = _fallback.e_step, _fallback.e_step_shared
    else:
        mod_full, mod_shared = _e_step, _e_step_shared
    if var.ndim == 1:
        mu, phi = mod_shared(S, Y, np.ascontiguousarray(var), float(s2))
    else:
        mu, phi = mod_full(S, Y, np.asfortranarray(var), float(s2))
    return mu, np.maximum(phi, np.finfo(float).tiny)
