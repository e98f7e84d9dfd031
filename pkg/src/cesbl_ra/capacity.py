"""Identifiability bounds for row-sparse and cluster-sparse MMV recovery.

``lemma1_bound`` is the classical maximum row sparsity of a noiseless MMV
problem with ``L_hat`` measurements and observation rank ``M_meas``.
``theorem1_bound`` counts ``floor(M / D)`` independent sub-problems of width
``D`` (the widest cluster), each allowed the row-sparse bound with ``D``
columns.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np


class EnumerationBudgetError(RuntimeError):
    pass


def _ceil_half(n: int) -> int:
    return -(-n // 2)


def lemma1_bound(L_hat: int, M_meas: int) -> int:
    if L_hat < 1 or M_meas < 1:
        raise ValueError("L_hat and M_meas must be positive")
    if M_meas > L_hat:
        raise ValueError(f"observation rank {M_meas} exceeds L_hat {L_hat}")
    return _ceil_half(L_hat + M_meas) - 1


def theorem1_bound(L_hat: int, M_cols: int, D: int) -> int:
    if min(L_hat, M_cols, D) < 1:
        raise ValueError("L_hat, M and D must be positive")
    if D > M_cols:
        raise ValueError(f"cluster length {D} exceeds M {M_cols}")
    return (M_cols // D) * (_ceil_half(L_hat + D) - 1)


def _lemma1_unchecked(L_hat: int, M_cols: int) -> int:
    # the row-sparse bound with full observation rank M, no rank check
    return _ceil_half(L_hat + M_cols) - 1


def delta_gap(L_hat: int, M_cols: int, D: int) -> int:
    return theorem1_bound(L_hat, M_cols, D) - _lemma1_unchecked(L_hat, M_cols)


def delta_lower_bound(L_hat: int, M_cols: int, D: int) -> float:
    """Real relaxation of the gap: floor(M/D) >= M/D - 1, ceil(x/2) - 1 <= x/2.

    Expanding ``(M/D - 1)((L_hat + D)/2 - 1) - (L_hat + M)/2`` gives
    ``M (L_hat - 2) / (2 D) - L_hat - D/2 + 1``.
    """
    return M_cols * (L_hat - 2) / (2 * D) - L_hat - D / 2 + 1


def bounds_table(L_values, M_values, D_values=None) -> list[dict]:
    rows = []
    for L_hat in L_values:
        for M in M_values:
            for D in (D_values or range(1, M + 1)):
                if D > M:
                    continue
                rows.append(
                    dict(
                        L_hat=L_hat, M=M, D=D,
                        lemma1=_lemma1_unchecked(L_hat, M),
                        theorem1=theorem1_bound(L_hat, M, D),
                        delta=delta_gap(L_hat, M, D),
                    )
                )
    return rows


def bounds_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["L_hat", "M", "D", "lemma1", "theorem1", "delta"], lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


@dataclass
class TinyInstance:
    S: np.ndarray  # (L_hat, N_hat) generic sensing matrix
    X: np.ndarray  # (N_hat, M) planted row-sparse solution
    support: tuple

    @property
    def Y(self) -> np.ndarray:
        return self.S @ self.X

    @property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.Y))


def plant_instance(L_hat: int, N_hat: int, M_cols: int, r: int, rng) -> TinyInstance:
    """Complex Gaussian sensing matrix with ``r`` random nonzero rows planted."""
    if not 0 < r <= N_hat:
        raise ValueError(f"sparsity {r} outside [1, {N_hat}]")
    S = rng.standard_normal((L_hat, N_hat)) + 1j * rng.standard_normal((L_hat, N_hat))
    support = tuple(sorted(rng.choice(N_hat, size=r, replace=False).tolist()))
    X = np.zeros((N_hat, M_cols), dtype=complex)
    X[list(support)] = rng.standard_normal((r, M_cols)) + 1j * rng.standard_normal((r, M_cols))
    return TinyInstance(S=S, X=X, support=support)


def exact_fit(S_sub: np.ndarray, Y: np.ndarray, rtol: float = 1e-8) -> bool:
    Z, *_ = np.linalg.lstsq(S_sub, Y, rcond=None)
    return np.linalg.norm(S_sub @ Z - Y) <= rtol * np.linalg.norm(Y)


def brute_force_uniqueness(instance: TinyInstance, r: int | None = None, *, max_combinations: int = 200_000,
                           rtol: float = 1e-8) -> bool:
    """True iff no support of size <= r other than the planted one fits Y exactly."""
    N_hat = instance.S.shape[1]
    r = len(instance.support) if r is None else r
    total = sum(math.comb(N_hat, k) for k in range(1, r + 1))
    if total > max_combinations:
        raise EnumerationBudgetError(f"{total} supports exceed the budget of {max_combinations}")
    Y = instance.Y
    for k in range(1, r + 1):
        for cols in itertools.combinations(range(N_hat), k):
            if cols == instance.support:
                continue
            if exact_fit(instance.S[:, cols], Y, rtol):
                return False
    return True


def cluster_uniqueness(L_hat: int, N_hat: int, M_cols: int, D: int, rng, **kw) -> tuple[bool, int]:
    """Check a cluster-aligned instance block by block.

    The columns are cut into ``M // D`` blocks of width ``D``; each block gets
    its own planted support at the row-sparse limit for ``D`` columns and is
    verified by :func:`brute_force_uniqueness`. Returns (all unique, total
    number of nonzero (row, block) pairs).
    """
    per_block = min(_ceil_half(L_hat + D) - 1, N_hat)
    ok, total = True, 0
    for _ in range(M_cols // D):
        inst = plant_instance(L_hat, N_hat, D, per_block, rng)
        total += per_block
        ok &= brute_force_uniqueness(inst, **kw)
    return ok, total
