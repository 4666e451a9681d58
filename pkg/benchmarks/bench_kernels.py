"""Benchmark the compiled kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 50,100,300] [--repeat 5]

Times the two hot kernels (pairwise squared distances and the t-SNE
gradient/KL pass) plus a short end-to-end t-SNE run on both backends.
"""

import argparse
import time

import numpy as np

from newsprism._kernels import _ops_py

try:
    from newsprism._kernels import _ops
except ImportError:
    _ops = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_backend(mod, X, P, Y, repeat):
    return {
        "pairwise": best_of(lambda: mod.pairwise_sq_dists(X), repeat),
        "grad_kl": best_of(lambda: mod.tsne_grad_kl(P, Y), repeat),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="50,100,300")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _ops is None:
        print("compiled kernels unavailable; showing the pure backend only")
    header = f"{'n':>5} {'kernel':<10} {'pure (ms)':>10}"
    if _ops is not None:
        header += f" {'compiled (ms)':>14} {'speedup':>8}"
    print(header)
    rng = np.random.default_rng(0)
    for n in sizes:
        X = rng.normal(size=(n, 16))
        P = np.abs(rng.normal(size=(n, n)))
        P = (P + P.T) / 2
        np.fill_diagonal(P, 0.0)
        P /= P.sum()
        Y = rng.normal(size=(n, 2))
        pure = bench_backend(_ops_py, X, P, Y, args.repeat)
        comp = bench_backend(_ops, X, P, Y, args.repeat) if _ops is not None else None
        for kernel in ("pairwise", "grad_kl"):
            line = f"{n:>5} {kernel:<10} {pure[kernel] * 1e3:>10.3f}"
            if comp is not None:
                ratio = pure[kernel] / comp[kernel]
                line += f" {comp[kernel] * 1e3:>14.3f} {ratio:>7.2f}x"
            print(line)

    # end-to-end flavor: a short t-SNE run through the public API
    from newsprism.opinion_map import TsneConfig, tsne

    X = rng.normal(size=(100, 16))
    cfg = TsneConfig(perplexity=15.0, iterations=250, seed=1)
    t0 = time.perf_counter()
    tsne(X, cfg)
    print(f"\ntsne n=100, 250 iters, active backend: {time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    main()
