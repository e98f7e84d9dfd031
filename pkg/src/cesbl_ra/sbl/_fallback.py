"""Pure numpy versions of the compiled E-step kernels (same contract)."""

import numpy as np


def _solve_lower(R, rhs):
    return np.linalg.solve(R, rhs)


def e_step(S, Y, g, s2):
    L = S.shape[0]
    root = np.sqrt(g.T)  # (M, N)
    B = S[None, :, :] * root[:, None, :]  # (M, L, N)
    C = B @ B.conj().transpose(0, 2, 1)
    C[:, np.arange(L), np.arange(L)] += s2
    try:
        R = np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError("posterior system not positive definite") from exc
    W = _solve_lower(R, B)
    z = _solve_lower(R, Y.T[:, :, None])
    mu = root * (W.conj().transpose(0, 2, 1) @ z)[:, :, 0]
    quad = np.sum(W.real**2 + W.imag**2, axis=1)
    phi = g.T * (1.0 - quad)
    return mu.T, phi.T


def e_step_shared(S, Y, g, s2):
    L = S.shape[0]
    root = np.sqrt(g)
    B = S * root
    C = B @ B.conj().T
    C[np.arange(L), np.arange(L)] += s2
    try:
        R = np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError("posterior system not positive definite") from exc
    W = _solve_lower(R, B)
    Z = _solve_lower(R, Y)
    mu = root[:, None] * (W.conj().T @ Z)
    phi = g * (1.0 - np.sum(W.real**2 + W.imag**2, axis=0))
    return mu, np.repeat(phi[:, None], Y.shape[1], axis=1)
