#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Runs both implementations of the flooding decoder and the exact-sum
demapper on identical workloads and prints per-call timings.  The numba
path needs one warm-up call per function to trigger compilation (cached
across runs).

Usage: python benchmarks/bench_kernels.py [--frames N]
"""

import argparse
import time

import numpy as np

from cfidd import _kernels, ldpc
from cfidd.detect import Constellation


def timeit(fn, repeats):
    fn()  # warm-up (JIT compile on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_decoder(n_frames):
    pc = ldpc.build_parity_check(256, 128, seed=0)
    g = pc.graph
    rng = np.random.default_rng(0)
    # moderately noisy codeword LLRs: a realistic mix of early exits
    msgs = rng.integers(0, 2, (n_frames, 128), dtype=np.uint8)
    llrs = []
    for m in msgs:
        cw = ldpc.encode(pc, m)
        llrs.append((1.0 - 2.0 * cw) * 3.0 + rng.normal(0, 1.8, 256))
    llrs = np.array(llrs)

    def run_numba():
        for x in llrs:
            _kernels._decode_flood_numba(x, g.chk_ptr, g.chk_var, g.var_ptr,
                                         g.var_edge, 10, 40.0)

    def run_numpy():
        for x in llrs:
            _kernels._decode_flood_numpy(x, g.chk_ptr, g.chk_var, g.var_ptr,
                                         g.var_edge, 10, 40.0,
                                         g.chk_edge_mat, g.chk_mask)

    return run_numba, run_numpy


def bench_demapper(n_frames):
    c = Constellation.qpsk()
    rng = np.random.default_rng(1)
    n = 128 * n_frames
    s = rng.normal(size=n) + 1j * rng.normal(size=n)
    mu = np.full(n, 0.9 + 0.02j)
    s2 = rng.uniform(0.3, 1.5, n)
    pri = rng.uniform(-4, 4, (n, 2))

    def run_numba():
        _kernels._demap_exact_numba(s, mu, s2, pri, c.points, c.levels, 40.0)

    def run_numpy():
        _kernels._demap_exact_numpy(s, mu, s2, pri, c.points, c.levels, 40.0)

    return run_numba, run_numpy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=64,
                    help="codeword frames per timed call")
    ap.add_argument("--repeats", type=int, default=10)
    args = ap.parse_args()

    if not _kernels.NUMBA_ENABLED:
        print("numba backend disabled (CFIDD_NUMBA=0 or numba missing); "
              "only the numpy path can be timed here")

    print(f"{args.frames} frames per call, {args.repeats} repeats\n")
    print(f"{'kernel':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, maker in (("flooding decoder", bench_decoder),
                        ("exact-sum demapper", bench_demapper)):
        run_nb, run_np = maker(args.frames)
        t_np = timeit(run_np, args.repeats)
        if _kernels.NUMBA_ENABLED:
            t_nb = timeit(run_nb, args.repeats)
            print(f"{name:<28}{t_nb * 1e3:>10.2f}ms{t_np * 1e3:>10.2f}ms"
                  f"{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<28}{'-':>12}{t_np * 1e3:>10.2f}ms{'-':>10}")


if __name__ == "__main__":
    main()
