"""Closed-form M-step updates for the cluster-extended prior.

All functions take the stacked real posterior moments ``mu`` and ``phi`` of
shape ``(2 N, M)``. Rows ``i`` and ``i + N`` are the real and imaginary parts of
one complex unknown; they share hyperparameters, so their second moments are
pooled (averaged) before any update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    a: float = 30.0
    b: float = 1e-4
    c: float = 0.125
    d: float = 1e-4
    lam: float = 0.01
    kappa: float = 0.1
    sigma2: float | None = None  # stacked real per-entry noise variance
    tol: float = 1e-8
    max_iters: int = 500

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lam must lie in [0, 1], got {self.lam}")
        if self.kappa <= 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa}")
        if min(self.a, self.b, self.c, self.d) <= 0:
            raise ConfigError("Gamma hyperprior parameters a, b, c, d must be positive")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.sigma2 is not None and self.sigma2 <= 0:
            raise ConfigError("sigma2 must be positive")


def pooled_moments(mu: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """E[x^2] per logical entry, averaged over the real/imaginary pair."""
    n = mu.shape[0] // 2
    m2 = mu**2 + phi
    return 0.5 * (m2[:n] + m2[n:])


def neighbour_sum(Z: np.ndarray, kappa: float) -> np.ndarray:
    """kappa * Z[:, j-1] + Z[:, j] + kappa * Z[:, j+1], columns wrap around."""
    return kappa * np.roll(Z, 1, axis=1) + Z + kappa * np.roll(Z, -1, axis=1)


def alpha_from_moments(m2: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    v = m2.mean(axis=1)
    return (8 * cfg.a + 2) / (8 * cfg.b + v / cfg.lam)


def beta_from_moments(m2: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    if cfg.lam >= 1.0:
        raise ConfigError("beta update undefined for lam = 1; use the row-sparse prior")
    q = neighbour_sum(m2, cfg.kappa)
    return 8 * cfg.c / (8 * cfg.d + q / (1 - cfg.lam))


def update_alpha(mu, phi, cfg: SolverConfig) -> np.ndarray:
    if cfg.lam <= 0:
        raise ConfigError("alpha update needs lam > 0")
    return alpha_from_moments(pooled_moments(mu, phi), cfg)


def update_beta(mu, phi, cfg: SolverConfig) -> np.ndarray:
    return beta_from_moments(pooled_moments(mu, phi), cfg)


def prior_variance(alpha, beta, cfg: SolverConfig) -> np.ndarray:
    """1 / gamma, the per-entry prior variance of the weighted prior."""
    lam = cfg.lam
    if lam >= 1.0:
        return np.broadcast_to((1.0 / alpha)[:, None], beta.shape).copy()
    var = (1 - lam) / neighbour_sum(beta, cfg.kappa)
    if lam > 0:
        var = var + lam / alpha[:, None]
    return var


def combine_gamma(alpha, beta, cfg: SolverConfig) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return 1.0 / prior_variance(alpha, beta, cfg)


def jensen_gap(alpha, beta_tilde, lam):
    """Exact weighted harmonic term and its decoupled arithmetic surrogate."""
    exact = 1.0 / (lam / alpha + (1 - lam) / beta_tilde)
    approx = alpha / (4 * lam) + beta_tilde / (4 * (1 - lam))
    return exact, approx
