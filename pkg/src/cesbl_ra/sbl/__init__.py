from .posterior import BACKEND, e_step, posterior_stats
from .solvers import SOLVERS, SolverResult, SolverState, ce_sbl, m_sbl
from .updates import (
    ConfigError,
    SolverConfig,
    combine_gamma,
    jensen_gap,
    pooled_moments,
    prior_variance,
    update_alpha,
    update_beta,
)

__all__ = [
    "BACKEND", "ConfigError", "SOLVERS", "SolverConfig", "SolverResult", "SolverState",
    "ce_sbl", "combine_gamma", "e_step", "jensen_gap", "m_sbl", "pooled_moments",
    "posterior_stats", "prior_variance", "update_alpha", "update_beta",
]
