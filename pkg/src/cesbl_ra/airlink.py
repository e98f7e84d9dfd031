"""Ground-truth assembly, delay-angle transform, noisy observation, real stacking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pilots import ExtendedPilotMatrix


class DegenerateSignalError(ValueError):
    pass


@dataclass
class GroundTruth:
    users: list
    D_hat: np.ndarray  # (N_hat, M) antenna domain
    X_hat: np.ndarray  # (N_hat, M) delay-angle domain
    support_rows: frozenset
    user_rows: list


@dataclass
class Measurement:
    Y_hat: np.ndarray  # (L_hat, M)
    sigma2: float  # complex per-entry noise variance
    snr_db: float


@dataclass
class RealSystem:
    """``[Re Y; Im Y] = [[Re S, -Im S], [Im S, Re S]] [Re X; Im X]``.

    Row ``i`` and row ``i + N_hat`` of the unknown are the real and imaginary
    parts of the same complex entry.
    """

    A: np.ndarray  # (2 L_hat, 2 N_hat)
    Y: np.ndarray  # (2 L_hat, M)

    @property
    def n_logical(self) -> int:
        return self.A.shape[1] // 2

    def pair(self, i: int) -> int:
        n = self.n_logical
        return i + n if i < n else i - n


def dft_transform_matrix(M: int) -> np.ndarray:
    m = np.arange(M)
    return np.exp(-2j * np.pi * np.outer(m, m) / M) / np.sqrt(M)


def assemble_ground_truth(users, ext: ExtendedPilotMatrix, M: int) -> GroundTruth:
    if not users:
        raise ValueError("at least one active user is required")
    D = np.zeros((ext.n_rows, M), dtype=np.complex128)
    rows = []
    for u in users:
        j = ext.index_of(u.pilot_index, u.frame_delay)
        D[j] += u.channel
        rows.append(j)
    X = D @ dft_transform_matrix(M)
    return GroundTruth(users=list(users), D_hat=D, X_hat=X, support_rows=frozenset(rows), user_rows=rows)


def synthesize_received(ext: ExtendedPilotMatrix, truth: GroundTruth, snr_db: float, rng) -> Measurement:
    """Y = S X + N with noise power set relative to the mean per-entry signal power."""
    clean = ext.matrix @ truth.X_hat
    p_sig = float(np.mean(np.abs(clean) ** 2))
    if p_sig == 0.0:
        raise DegenerateSignalError("noise-free observation is identically zero")
    if np.isinf(snr_db) and snr_db > 0:
        return Measurement(Y_hat=clean, sigma2=0.0, snr_db=snr_db)
    sigma2 = p_sig * 10.0 ** (-snr_db / 10.0)
    noise = rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape)
    return Measurement(Y_hat=clean + np.sqrt(sigma2 / 2) * noise, sigma2=sigma2, snr_db=snr_db)


def realify_matrix(S: np.ndarray) -> np.ndarray:
    return np.block([[S.real, -S.imag], [S.imag, S.real]])


def stack(Z: np.ndarray) -> np.ndarray:
    return np.concatenate([Z.real, Z.imag], axis=0)


def complexify(Z: np.ndarray) -> np.ndarray:
    half = Z.shape[0] // 2
    return Z[:half] + 1j * Z[half:]


def complexify_matrix(A: np.ndarray) -> np.ndarray:
    r, c = A.shape[0] // 2, A.shape[1] // 2
    return A[:r, :c] + 1j * A[r:, :c]


def realify(S: np.ndarray, Y_hat: np.ndarray) -> RealSystem:
    if S.shape[0] != Y_hat.shape[0]:
        raise ValueError(f"row mismatch: S has {S.shape[0]}, Y has {Y_hat.shape[0]}")
    return RealSystem(A=realify_matrix(S), Y=stack(Y_hat))
