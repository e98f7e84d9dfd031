"""Common pilot pool and its asynchronously extended sensing matrix."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

POOL_MAGIC = b"CSBLPOOL"
_HEADER = struct.Struct("<8sII")


class DimensionError(ValueError):
    """Raised for empty or inconsistent matrix dimensions."""


@dataclass(frozen=True)
class PilotPool:
    pilots: np.ndarray  # (L, N_p) complex, unit-norm columns
    seed: int = 0

    @property
    def length(self) -> int:
        return self.pilots.shape[0]

    @property
    def count(self) -> int:
        return self.pilots.shape[1]


@dataclass(frozen=True)
class ExtendedPilotMatrix:
    """Zero-padded delay shifts of every pilot, ordered pilot-major.

    Column ``j`` holds pilot ``j // (t_m + 1)`` delayed by ``j % (t_m + 1)``
    symbols.
    """

    matrix: np.ndarray  # (L + t_m, N_p * (t_m + 1)) complex
    t_m: int
    n_pilots: int = field(default=0)

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[1]

    def row_map(self, j: int) -> tuple[int, int]:
        if not 0 <= j < self.n_rows:
            raise IndexError(f"extended index {j} outside [0, {self.n_rows})")
        return divmod(int(j), self.t_m + 1)

    def index_of(self, pilot: int, delay: int) -> int:
        if not 0 <= delay <= self.t_m:
            raise IndexError(f"delay {delay} outside [0, {self.t_m}]")
        if not 0 <= pilot < self.n_pilots:
            raise IndexError(f"pilot {pilot} outside [0, {self.n_pilots})")
        return pilot * (self.t_m + 1) + delay


def generate_pilot_pool(L: int, n_pilots: int, seed: int) -> PilotPool:
    """Draw i.i.d. CN(0, 1) pilots and normalise each column to unit norm."""
    if L < 1 or n_pilots < 1:
        raise DimensionError(f"pilot pool needs L >= 1 and N_p >= 1, got ({L}, {n_pilots})")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((L, n_pilots)) + 1j * rng.standard_normal((L, n_pilots))
    pilots = raw / np.linalg.norm(raw, axis=0, keepdims=True)
    return PilotPool(pilots=pilots, seed=seed)


def extend_pilot(s, t: int, t_m: int) -> np.ndarray:
    s = np.asarray(s)
    if t_m < 0 or not 0 <= t <= t_m:
        raise IndexError(f"delay {t} outside [0, {t_m}]")
    out = np.zeros(s.shape[0] + t_m, dtype=np.result_type(s.dtype, np.complex128))
    out[t : t + s.shape[0]] = s
    return out


def build_extended_matrix(pool: PilotPool, t_m: int) -> ExtendedPilotMatrix:
    if t_m < 0:
        raise DimensionError(f"t_m must be non-negative, got {t_m}")
    S = pool.pilots
    L, n_p = S.shape
    ext = np.zeros((L + t_m, n_p * (t_m + 1)), dtype=np.complex128)
    for t in range(t_m + 1):
        ext[t : t + L, t :: t_m + 1] = S
    return ExtendedPilotMatrix(matrix=ext, t_m=t_m, n_pilots=n_p)


def save_pool(pool: PilotPool, path) -> None:
    """Write the pool as a header plus little-endian (re, im) float64 pairs, column-major."""
    L, n_p = pool.pilots.shape
    body = np.empty((n_p, L, 2), dtype="<f8")
    body[..., 0] = pool.pilots.real.T
    body[..., 1] = pool.pilots.imag.T
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(POOL_MAGIC, L, n_p))
        fh.write(body.tobytes())


def load_pool(path, seed: int = 0) -> PilotPool:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated pilot pool header")
    magic, L, n_p = _HEADER.unpack_from(raw)
    if magic != POOL_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 16 * L * n_p
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n_p, L, 2)
    pilots = (body[..., 0] + 1j * body[..., 1]).T.copy()
    return PilotPool(pilots=pilots, seed=seed)
