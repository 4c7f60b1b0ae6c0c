"""Compiled vs pure-Python LiL'UCB pull loop.

    python benchmarks/bench_kernels.py [--arms 20100] [--pulls 1000000] [--repeat 3]

Prints the best-of-N wall time per backend and checks both return
identical pull counts.
"""
import argparse
import time

import numpy as np

from pairpref import kernels


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--arms", type=int, default=200 * 201 // 2)
    ap.add_argument("--pulls", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    probs = rng.random(args.arms)
    u = rng.random(args.pulls)
    results = {}
    for backend in ("python", "cython"):
        try:
            impl = kernels.get(backend)
        except ImportError:
            print(f"{backend:>7}: not built")
            continue
        t, out = best_time(lambda: impl.lil_ucb_pulls(probs, u, 0.01, 1.0, 0.02), args.repeat)
        results[backend] = out
        print(f"{backend:>7}: {t * 1e3:9.1f} ms  ({args.pulls / t / 1e6:.2f} M pulls/s)")
    if len(results) == 2:
        same = all(np.array_equal(a, b) for a, b in zip(results["python"], results["cython"]))
        print(f"identical output: {same}")


if __name__ == "__main__":
    main()
