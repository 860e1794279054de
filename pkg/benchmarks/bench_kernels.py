"""Throughput comparison of the numba kernels against the numpy fallbacks.

Run as:  python benchmarks/bench_kernels.py

Times the two hot paths used by the Monte Carlo harness, batch template
planting and candidate pattern scanning, at sweep-scale sizes.  The
same arrays go through both implementations and the results are checked
for equality before timing.
"""

import time

import numpy as np

from plantedsub import kernels
from plantedsub.hypercore import binom, subset_table
from plantedsub.models import ModelParams, make_rng, sample_embedding_targets_batch
from plantedsub.models import sample_H


def _timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_plant(n, k, r, trials, rng):
    params = ModelParams(n=n, k=k, r=r)
    h = sample_H(k, r, rng)
    phis = sample_embedding_targets_batch(params, trials, rng)
    base = rng.integers(0, 2, size=(trials, binom(n, r)), dtype=np.uint8)
    subsets = np.asarray(subset_table(k, r))

    out_np = base.copy()
    kernels._plant_batch_np(out_np, phis, subsets, h.bits, n)
    t_np = _timeit(lambda: kernels._plant_batch_np(base.copy(), phis, subsets, h.bits, n))

    t_nb = None
    if kernels.BACKEND == "numba":
        from plantedsub.hypercore import _rank_prefix_tables

        prefix = np.ascontiguousarray(_rank_prefix_tables(n, r))
        out_nb = base.copy()
        kernels._plant_batch_nb(out_nb, phis, subsets, h.bits, prefix, n)
        assert np.array_equal(out_nb, out_np), "backend results differ"
        t_nb = _timeit(lambda: kernels._plant_batch_nb(base.copy(), phis, subsets, h.bits,
                                                       prefix, n))
    return t_np, t_nb


def bench_match(n, r, trials, candidates, width, rng):
    bits = rng.integers(0, 2, size=(trials, binom(n, r)), dtype=np.uint8)
    cand = rng.integers(0, binom(n, r), size=(candidates, width)).astype(np.int64)
    patterns = rng.integers(0, 2, size=width, dtype=np.uint8)

    ref = kernels._match_any_np(bits, cand, patterns)
    t_np = _timeit(lambda: kernels._match_any_np(bits, cand, patterns))
    t_nb = None
    if kernels.BACKEND == "numba":
        got = kernels._match_any_nb(bits, cand, patterns)
        assert np.array_equal(got, ref), "backend results differ"
        t_nb = _timeit(lambda: kernels._match_any_nb(bits, cand, patterns))
    return t_np, t_nb


def main():
    rng = make_rng(0)
    print(f"selected backend: {kernels.backend_name()}")
    print(f"{'kernel':<28}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    cases = [
        ("plant n=64 k=16 T=20000", lambda: bench_plant(64, 16, 2, 20000, rng)),
        ("plant n=64 k=32 T=20000", lambda: bench_plant(64, 32, 2, 20000, rng)),
        ("plant n=24 k=8 r=3 T=20000", lambda: bench_plant(24, 8, 3, 20000, rng)),
        ("match n=64 V=60 P=8 T=50000", lambda: bench_match(64, 2, 50000, 60, 8, rng)),
    ]
    for name, fn in cases:
        t_np, t_nb = fn()
        if t_nb is None:
            print(f"{name:<28}{t_np:>12.4f}{'n/a':>12}{'':>10}")
        else:
            print(f"{name:<28}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
