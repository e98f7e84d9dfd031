"""Seeded Monte-Carlo trials and parameter sweeps."""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import airlink, channel, detection, pilots
from .sbl import SOLVERS

log = logging.getLogger(__name__)

CSV_FIELDS = (
    "sweep_param", "sweep_value", "solver", "trials", "mu_ad_mean", "mu_ad_se",
    "nmse_ce_db_mean", "nmse_ce_db_se", "avg_iters", "nonconverged",
)

# purpose tags for child random streams
TAG_PILOTS, TAG_USERS, TAG_NOISE = 1, 2, 3


def child_rng(seed: int, tag: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag, *key)))


@lru_cache(maxsize=32)
def _pool(seed: int, L: int, n_pilots: int) -> pilots.PilotPool:
    ss = np.random.SeedSequence(seed, spawn_key=(TAG_PILOTS, L, n_pilots))
    return pilots.generate_pilot_pool(L, n_pilots, int(ss.generate_state(1, np.uint64)[0]))


@dataclass
class Instance:
    config: object
    ext: pilots.ExtendedPilotMatrix
    truth: airlink.GroundTruth
    measurement: airlink.Measurement
    system: airlink.RealSystem
    Psi: np.ndarray


@dataclass
class TrialResult:
    solver: str
    score: detection.ScoreReport
    iterations: int
    converged: bool
    seconds: float
    detections: list = field(default_factory=list, repr=False)
    solver_result: object = field(default=None, repr=False)


def build_instance(config, seed: int, point: int = 0, trial: int = 0) -> Instance:
    pool = _pool(seed, config.L, config.N_p)
    ext = pilots.build_extended_matrix(pool, config.t_m)
    users = channel.sample_actives(
        config.K, config.channel_params(), config.N_p, config.t_m, child_rng(seed, TAG_USERS, point, trial)
    )
    truth = airlink.assemble_ground_truth(users, ext, config.M)
    meas = airlink.synthesize_received(ext, truth, config.snr_db, child_rng(seed, TAG_NOISE, point, trial))
    return Instance(
        config=config, ext=ext, truth=truth, measurement=meas,
        system=airlink.realify(ext.matrix, meas.Y_hat), Psi=airlink.dft_transform_matrix(config.M),
    )


def solve_instance(inst: Instance, solver_id: str, backend=None) -> TrialResult:
    cfg = inst.config
    sigma2 = cfg.noiseless_sigma2 if inst.measurement.sigma2 == 0.0 else inst.measurement.sigma2
    start = time.perf_counter()
    result = SOLVERS[solver_id](inst.system, cfg.solver_config(sigma2), backend=backend)
    elapsed = time.perf_counter() - start
    X_est = result.estimate
    det_cfg = cfg.detector_config()
    found = detection.detect_users(X_est, cfg.t_m, det_cfg, inst.Psi)
    score = detection.match_and_score(inst.truth, found, det_cfg, X_est=X_est, Psi=inst.Psi)
    return TrialResult(solver_id, score, result.iterations, result.converged, elapsed, found, result)


def run_trial(config, solver_id: str, seed: int, point: int = 0, trial: int = 0, backend=None) -> TrialResult:
    """Full pipeline for one trial; determined by (config, seed, point, trial)."""
    if solver_id not in SOLVERS:
        raise KeyError(f"unknown solver {solver_id!r}")
    return solve_instance(build_instance(config, seed, point, trial), solver_id, backend)


def _point_trial(args):
    config, solvers, seed, point, trial = args
    inst = build_instance(config, seed, point, trial)
    out = []
    for s in solvers:
        r = solve_instance(inst, s)
        out.append((s, r.score.mu_ad, r.score.nmse_ce_db, r.iterations, r.converged))
    return point, trial, out


def _mean_se(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))


def aggregate(spec, per_trial) -> list[dict]:
    """per_trial: {(point, solver): list ordered by trial index of (mu, nmse, iters, converged)}."""
    rows = []
    for p, value in enumerate(spec.values):
        for s in spec.solvers:
            recs = per_trial[(p, s)]
            mu_m, mu_se = _mean_se([r[0] for r in recs])
            nm_m, nm_se = _mean_se([r[1] for r in recs])
            rows.append(dict(
                sweep_param=spec.sweep, sweep_value=value, solver=s, trials=len(recs),
                mu_ad_mean=mu_m, mu_ad_se=mu_se, nmse_ce_db_mean=nm_m, nmse_ce_db_se=nm_se,
                avg_iters=float(np.mean([r[2] for r in recs])),
                nonconverged=sum(1 for r in recs if not r[3]),
            ))
    return rows


def _format(row) -> dict:
    return {k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()}


def run_sweep(spec, jobs: int = 1, csv_path=None, trials_path=None, progress=None) -> list[dict]:
    """Run every (sweep value, trial) instance through every solver.

    Instances depend only on (seed, point index, trial index), so both solvers
    see identical data and extra trials never perturb earlier ones. Summary
    rows are flushed to ``csv_path`` as soon as each sweep point completes.
    """
    tasks = [
        (spec.point(v), tuple(spec.solvers), spec.seed, p, t)
        for p, v in enumerate(spec.values)
        for t in range(spec.trials)
    ]
    per_trial = {(p, s): [None] * spec.trials for p in range(len(spec.values)) for s in spec.solvers}
    remaining = {p: spec.trials for p in range(len(spec.values))}
    summary_fh = trial_fh = None
    try:
        if csv_path is not None:
            Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
            summary_fh = open(csv_path, "w", newline="")
            summary = csv.DictWriter(summary_fh, fieldnames=CSV_FIELDS, lineterminator="\n")
            summary.writeheader()
        if trials_path is not None:
            trial_fh = open(trials_path, "w", newline="")
            trial_writer = csv.writer(trial_fh, lineterminator="\n")
            trial_writer.writerow(["sweep_value", "trial", "solver", "mu_ad", "nmse_ce_db", "iters", "converged"])
        if jobs > 1:
            pool = ProcessPoolExecutor(max_workers=jobs)
            results = pool.map(_point_trial, tasks, chunksize=1)
        else:
            pool = None
            results = map(_point_trial, tasks)
        try:
            for point, trial, out in results:
                for s, mu, nm, it, conv in out:
                    per_trial[(point, s)][trial] = (mu, nm, it, conv)
                    if trial_fh:
                        trial_writer.writerow([spec.values[point], trial, s, repr(mu), repr(nm), it, int(conv)])
                remaining[point] -= 1
                if progress:
                    progress(point, trial)
                if remaining[point] == 0 and summary_fh:
                    sub = aggregate(_Single(spec, point), {(0, s): per_trial[(point, s)] for s in spec.solvers})
                    for row in sub:
                        summary.writerow(_format(row))
                    summary_fh.flush()
        finally:
            if pool is not None:
                pool.shutdown(cancel_futures=True)
    except OSError as exc:
        raise OSError(f"{exc.filename or csv_path}: {exc.strerror or exc}") from exc
    finally:
        for fh in (summary_fh, trial_fh):
            if fh:
                fh.close()
    return aggregate(spec, per_trial)


class _Single:
    def __init__(self, spec, point):
        self.values = (spec.values[point],)
        self.solvers = spec.solvers
        self.sweep = spec.sweep


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(_format(row))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k in CSV_FIELDS[3:]:
            row[k] = float(row[k])
        row["sweep_value"] = float(row["sweep_value"])
    return rows


def emit_plots(rows, out_dir) -> list[Path]:
    """One SVG per metric: metric against the swept value, a series per solver."""
    if not rows:
        raise ValueError("no results to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # stable element ids and no timestamp, so reruns give identical files
    matplotlib.rcParams["svg.hashsalt"] = "cesbl-ra"

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    param = rows[0]["sweep_param"]
    written = []
    for metric, label in (("mu_ad", "active user detection ratio"), ("nmse_ce_db", "NMSE of CE [dB]")):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for solver in sorted({r["solver"] for r in rows}):
            sub = sorted((r for r in rows if r["solver"] == solver), key=lambda r: float(r["sweep_value"]))
            x = [float(r["sweep_value"]) for r in sub]
            ax.errorbar(x, [float(r[f"{metric}_mean"]) for r in sub], yerr=[float(r[f"{metric}_se"]) for r in sub],
                        marker="o", capsize=3, label=solver)
        ax.set_xlabel(param)
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"{metric}_vs_{param}.svg"
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
