"""Command line entry point: simulate, sweep, bounds, verify."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import capacity, channel, detection, harness, pilots
from .config import KNOWN_SOLVERS, ConfigError, build_experiment, load_experiment, load_system

log = logging.getLogger("cesbl_ra")


def _solvers(text: str) -> tuple:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in names if s not in KNOWN_SOLVERS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown solver(s) {bad}; choose from {','.join(KNOWN_SOLVERS)}")
    return names


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part.strip():
            out.append(int(part))
    return out


def cmd_simulate(args) -> int:
    config = load_system(args.config, args.profile)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inst = harness.build_instance(config, args.seed)
    pilots.save_pool(harness._pool(args.seed, config.L, config.N_p), out / "pilots.bin")
    (out / "ground_truth.txt").write_text(channel.format_ground_truth(inst.truth.users))
    print(f"M={config.M} N_p={config.N_p} L={config.L} K={config.K} t_m={config.t_m} snr_db={config.snr_db}")
    for solver in args.solvers:
        res = harness.solve_instance(inst, solver)
        (out / f"detections_{solver}.txt").write_text(detection.format_detections(res.detections))
        (out / f"trace_{solver}.csv").write_text(res.solver_result.trace_csv())
        s = res.score
        print(
            f"{solver}: mu_ad={s.mu_ad:.4f} ({s.detected_count}/{s.truth_count}) nmse_ce_db={s.nmse_ce_db:.2f} "
            f"false_rows={s.false_rows} iters={res.iterations} converged={res.converged} time={res.seconds:.2f}s"
        )
    return 0


def cmd_sweep(args) -> int:
    overrides = dict(seed=args.seed, solvers=args.solvers)
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.config:
        spec = load_experiment(args.config, args.profile, **overrides)
    else:
        spec = build_experiment({}, args.profile or "fast", **overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    total = len(spec.values) * spec.trials

    def progress(point, trial, done=[0]):
        done[0] += 1
        if args.verbose:
            print(f"\r{done[0]}/{total} trials", end="", file=sys.stderr, flush=True)

    rows = harness.run_sweep(
        spec, jobs=args.jobs, csv_path=out / "results.csv", trials_path=out / "trials.csv", progress=progress
    )
    if args.verbose:
        print(file=sys.stderr)
    for r in rows:
        print(
            f"{spec.sweep}={r['sweep_value']} {r['solver']}: mu_ad={r['mu_ad_mean']:.3f}+-{r['mu_ad_se']:.3f} "
            f"nmse_ce_db={r['nmse_ce_db_mean']:.2f}+-{r['nmse_ce_db_se']:.2f} iters={r['avg_iters']:.0f} "
            f"nonconverged={r['nonconverged']}"
        )
    if not args.no_plots:
        for path in harness.emit_plots(rows, out):
            log.info("wrote %s", path)
    return 0


def cmd_bounds(args) -> int:
    rows = capacity.bounds_table(_int_list(args.L_hat), _int_list(args.M), _int_list(args.D) if args.D else None)
    text = capacity.bounds_csv(rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bounds.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_verify(args) -> int:
    from .verify import run_all

    return 0 if run_all() else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--profile", choices=("fast", "paper"), default=None)
    common.add_argument("--solvers", type=_solvers, default=KNOWN_SOLVERS)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="cesbl-ra", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="run one trial and dump its artefacts")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("sweep", parents=[common], help="Monte-Carlo sweep to CSV and plots")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("bounds", parents=[common], help="identifiability bound table")
    p.add_argument("--L-hat", default="68", help="comma list or lo-hi range")
    p.add_argument("--M", default="64")
    p.add_argument("--D", default=None, help="defaults to every D in 1..M")
    p.set_defaults(func=cmd_bounds, out=None)
    p = sub.add_parser("verify", parents=[common], help="run the built-in oracle checks")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
