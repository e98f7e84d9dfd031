"""Time the compiled E-step against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from cesbl_ra.sbl import posterior

SIZES = {
    "fast": (28, 160, 32),    # L_hat, N_hat, M
    "paper": (68, 320, 64),
}


def _problem(L, N, M, seed=0):
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((L, N)) + 1j * rng.standard_normal((L, N))
    Y = rng.standard_normal((L, M)) + 1j * rng.standard_normal((L, M))
    var = rng.uniform(1e-3, 1.0, (N, M))
    return S, Y, var


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if posterior.BACKEND != "cython":
        print("compiled kernels unavailable; only the numpy fallback can be timed")
    print(f"{'size':6s} {'kernel':8s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, (L, N, M) in SIZES.items():
        S, Y, var = _problem(L, N, M)
        for kernel, v in (("per-col", var), ("shared", var[:, 0])):
            times = {}
            for backend in ("numpy", "cython"):
                if backend == "cython" and posterior.BACKEND != "cython":
                    continue
                fn = lambda: posterior.e_step(S, Y, v, 0.01, backend=backend)
                fn()
                times[backend] = min(timeit.repeat(fn, number=3, repeat=args.repeat)) / 3 * 1e3
            cy = times.get("cython", float("nan"))
            print(f"{name:6s} {kernel:8s} {times['numpy']:10.2f} {cy:10.2f} {times['numpy'] / cy:8.1f}")


if __name__ == "__main__":
    main()
