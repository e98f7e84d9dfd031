"""Quick self-check: closed forms, oracles and invariants in a few seconds."""

from __future__ import annotations

import math
import traceback

import numpy as np

from . import airlink, capacity, detection
from .sbl import SolverConfig, ce_sbl, combine_gamma, jensen_gap, posterior, update_alpha, update_beta

CHECKS = []


def check(fn):
    CHECKS.append(fn)
    return fn


def _close(a, b, rel=1e-9):
    return abs(a - b) <= rel * abs(b)


@check
def hyperparameter_updates():
    cfg = SolverConfig()
    zero = np.zeros((2, 3))
    ones = np.ones((2, 3))
    assert _close(update_alpha(zero, zero, cfg)[0], 302500.0)
    assert _close(update_alpha(zero, ones, cfg)[0], 242 / 100.0008)
    assert _close(update_beta(zero, zero, cfg)[0, 0], 1250.0)
    m = np.full((2, 3), 0.825)
    assert _close(update_beta(zero, m, cfg)[0, 0], 1 / 1.0008)
    assert _close(combine_gamma(np.ones(1), np.ones((1, 4)), cfg)[0, 0], 1 / 0.835)


@check
def identifiability_bounds():
    assert capacity.lemma1_bound(68, 64) == 65
    assert capacity.lemma1_bound(1, 1) == 0
    assert capacity.lemma1_bound(4, 3) == 3
    assert capacity.theorem1_bound(68, 64, 8) == 296
    assert capacity.theorem1_bound(6, 6, 2) == 9
    assert capacity.delta_gap(68, 64, 8) == 231
    assert capacity.delta_gap(6, 6, 2) == 4


@check
def jensen_surrogate():
    rng = np.random.default_rng(0)
    alpha = 10 ** rng.uniform(-4, 4, 10_000)
    beta = 10 ** rng.uniform(-4, 4, 10_000)
    lam = rng.uniform(1e-3, 1 - 1e-3, 10_000)
    exact, approx = jensen_gap(alpha, beta, lam)
    assert np.all(approx >= exact * (1 - 1e-12))
    exact, approx = jensen_gap(alpha, alpha * (1 - lam) / lam, lam)
    assert np.all(np.abs(approx - exact) < 1e-9 * approx)


@check
def posterior_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(2, 33))
        m = int(rng.integers(2, 2 * n))
        A = rng.standard_normal((m, 2 * n))
        y = rng.standard_normal(m)
        g = rng.uniform(0.1, 10, n)
        s2 = float(rng.uniform(0.01, 1))
        mu, phi = posterior.posterior_stats(A, y, g, s2)
        G = np.diag(np.r_[g, g])
        lhs = (A.T @ A / s2 + G) @ mu
        assert np.linalg.norm(lhs - A.T @ y / s2) < 1e-8 * np.linalg.norm(A.T @ y / s2)
        omega = np.linalg.inv(A.T @ A / s2 + G)
        assert np.allclose(phi, np.diag(omega), rtol=1e-8, atol=1e-12)


@check
def kernel_backends():
    rng = np.random.default_rng(2)
    S = rng.standard_normal((6, 10)) + 1j * rng.standard_normal((6, 10))
    Y = rng.standard_normal((6, 5)) + 1j * rng.standard_normal((6, 5))
    var = rng.uniform(0.1, 2, (10, 5))
    ref = posterior.e_step(S, Y, var, 0.3, backend="numpy")
    got = posterior.e_step(S, Y, var, 0.3)
    assert np.allclose(ref[0], got[0], atol=1e-10) and np.allclose(ref[1], got[1], atol=1e-10)


@check
def real_complex_stacking():
    rng = np.random.default_rng(3)
    S = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    X = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    sysr = airlink.realify(S, S @ X)
    assert np.allclose(sysr.A @ airlink.stack(X), sysr.Y, atol=1e-12)
    assert np.array_equal(airlink.complexify(airlink.stack(X)), X)


@check
def detector_rules():
    assert abs(detection.theta1_for_snr(15.0) - 0.96935) < 1e-5
    assert detection.detect_rows(np.sqrt([[9.0], [0.9], [0.1]]), 0.969) == [0, 1]
    assert detection.group_circular([2, 3, 10, 11], 64, 3) == [[2, 3], [10, 11]]
    assert len(detection.group_circular([0, 63], 64, 3)) == 1
    assert detection.extract_identity(7, 4) == (1, 2)
    assert detection.extract_identity(319, 4) == (63, 4)
    d = np.array([1.0, 1j])
    assert abs(detection.nmse_db(2 * d, d) - 10 * math.log10(0.25)) < 1e-12


@check
def uniqueness_oracle():
    rng = np.random.default_rng(4)
    for _ in range(10):
        assert capacity.brute_force_uniqueness(capacity.plant_instance(4, 8, 4, 3, rng))
    assert not capacity.brute_force_uniqueness(capacity.plant_instance(4, 8, 4, 4, rng))


@check
def noiseless_cluster_recovery():
    rng = np.random.default_rng(5)
    S = rng.standard_normal((6, 8)) + 1j * rng.standard_normal((6, 8))
    S /= np.linalg.norm(S, axis=0)
    X = np.zeros((8, 8), complex)
    X[2, 3:6] = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    est = ce_sbl(airlink.realify(S, S @ X), SolverConfig(sigma2=1e-6)).estimate
    err = 10 * math.log10(np.sum(np.abs(est - X) ** 2) / np.sum(np.abs(X) ** 2))
    assert err < -40, f"NMSE {err:.1f} dB"


def run_all(echo=print) -> bool:
    ok = True
    for fn in CHECKS:
        try:
            fn()
        except Exception as exc:
            ok = False
            detail = str(exc) or traceback.format_exc(limit=1).strip().splitlines()[-1]
            echo(f"FAIL {fn.__name__}: {detail}")
        else:
            echo(f"PASS {fn.__name__}")
    return ok
