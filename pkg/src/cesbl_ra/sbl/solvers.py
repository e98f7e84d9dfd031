"""EM loops for the cluster-extended SBL and the row-sparse M-SBL baseline."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .posterior import e_step
from .updates import (
    ConfigError,
    SolverConfig,
    alpha_from_moments,
    beta_from_moments,
    pooled_moments,
    prior_variance,
)

TRACE_FIELDS = ("iteration", "delta_x", "alpha_min", "alpha_max", "beta_min", "beta_max")


@dataclass
class SolverState:
    mu: np.ndarray  # (2N, M) stacked real posterior mean
    phi: np.ndarray  # (2N, M) marginal posterior variances
    alpha: np.ndarray
    beta: np.ndarray | None
    gamma: np.ndarray  # (N, M) precisions used for this E-step
    iteration: int
    delta_x: float


@dataclass
class SolverResult:
    X_map: np.ndarray  # (2N, M) real
    converged: bool
    iterations: int
    delta_x: np.ndarray
    trace: list = field(default_factory=list)
    final: SolverState | None = None

    @property
    def estimate(self) -> np.ndarray:
        n = self.X_map.shape[0] // 2
        return self.X_map[:n] + 1j * self.X_map[n:]

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_FIELDS)
        for row in self.trace:
            writer.writerow([row[k] for k in TRACE_FIELDS])
        return buf.getvalue()


def _complex_view(A):
    """Return S if A == [[Re S, -Im S], [Im S, Re S]], else None."""
    r, c = A.shape[0] // 2, A.shape[1] // 2
    if A.shape[0] % 2 or A.shape[1] % 2:
        return None
    re, im = A[:r, :c], A[r:, :c]
    if np.array_equal(A[r:, c:], re) and np.array_equal(A[:r, c:], -im):
        return re + 1j * im
    return None


class _Posterior:
    """E-step on a real stacked system with paired hyperparameters."""

    def __init__(self, system, sigma2, backend=None):
        if sigma2 is None:
            raise ConfigError("solver needs the noise variance sigma2")
        self.n = system.A.shape[1] // 2
        self.s2 = float(sigma2)
        self.backend = backend
        S = _complex_view(system.A)
        if S is not None:
            r = system.Y.shape[0] // 2
            self.S, self.Y, self.paired = S, system.Y[:r] + 1j * system.Y[r:], True
        else:
            # real A: the complex model decouples into two copies of the real one
            self.S, self.Y, self.paired = system.A.astype(complex), system.Y.astype(complex), False

    def __call__(self, var):
        """var: (N, M) or shared (N,) prior variance per real component."""
        if self.paired:
            mu, phi = e_step(self.S, self.Y, var, self.s2, self.backend)
            return np.concatenate([mu.real, mu.imag]), np.concatenate([phi, phi])
        full = np.concatenate([var, var])
        mu, phi = e_step(self.S, self.Y, full, self.s2, self.backend)
        return mu.real, phi


def _summary(arr):
    if arr is None:
        return float("nan"), float("nan")
    return float(np.min(arr)), float(np.max(arr))


def _run(system, cfg, posterior, hyper_update, callback=None):
    n, M = system.A.shape[1] // 2, system.Y.shape[1]
    var = np.ones((n, M))
    alpha, beta = np.ones(n), np.ones((n, M))
    X_prev = None
    deltas, trace = [], []
    state = None
    converged = False
    for it in range(1, cfg.max_iters + 1):
        shared = var if var.ndim == 1 else None
        mu, phi = posterior(var)
        delta = np.nan if X_prev is None else float(np.sum((mu - X_prev) ** 2))
        gamma = 1.0 / (np.broadcast_to(shared[:, None], (n, M)) if shared is not None else var)
        state = SolverState(mu, phi, alpha, beta, gamma, it, delta)
        if callback is not None:
            callback(state)
        a_lo, a_hi = _summary(alpha)
        b_lo, b_hi = _summary(beta)
        trace.append(dict(iteration=it, delta_x=delta, alpha_min=a_lo, alpha_max=a_hi, beta_min=b_lo, beta_max=b_hi))
        if X_prev is not None:
            deltas.append(delta)
            if delta < cfg.tol:
                converged = True
                break
        X_prev = mu
        alpha, beta, var = hyper_update(pooled_moments(mu, phi))
    return SolverResult(
        X_map=state.mu, converged=converged, iterations=state.iteration,
        delta_x=np.asarray(deltas), trace=trace, final=state,
    )


def ce_sbl(system, cfg: SolverConfig, *, backend=None, callback=None) -> SolverResult:
    """Cluster-extended SBL: row precision alpha and coupled entry precisions beta."""
    posterior = _Posterior(system, cfg.sigma2, backend)

    def update(m2):
        alpha = alpha_from_moments(m2, cfg) if cfg.lam > 0 else np.full(m2.shape[0], np.inf)
        beta = beta_from_moments(m2, cfg) if cfg.lam < 1 else np.full(m2.shape, np.inf)
        return alpha, beta, prior_variance(alpha, beta, cfg)

    return _run(system, cfg, posterior, update, callback)


def m_sbl(system, cfg: SolverConfig, *, backend=None, callback=None) -> SolverResult:
    """Row-sparse EM SBL; one prior variance per row shared by every column."""
    posterior = _Posterior(system, cfg.sigma2, backend)
    tiny = np.finfo(float).tiny

    def update(m2):
        var = np.maximum(m2.mean(axis=1), tiny)
        return 1.0 / var, None, var

    return _run(system, cfg, posterior, update, callback)


SOLVERS = {"ce_sbl": ce_sbl, "m_sbl": m_sbl}
