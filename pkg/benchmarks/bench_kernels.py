"""Time the compiled and pure-Python pair-scoring kernels on random states.

    python benchmarks/bench_kernels.py [--sizes 8 32 128 512] [--calls 200]
"""
import argparse
import time

import numpy as np

from edgeoffload import kernels


def random_inputs(m, rng):
    lf = np.triu(rng.uniform(0.1, 0.5, (m, m)), 1)
    return dict(
        covered=(rng.random(m) < 0.5).astype(np.uint8),
        u=rng.integers(0, 10, m).astype(np.int64),
        cap=np.full(m, 30, dtype=np.int64),
        v=rng.integers(0, 10, m).astype(np.int64),
        mem=rng.uniform(0, 8000, m),
        bw=rng.uniform(50, 150, m),
        cpu=rng.uniform(5e9, 1e10, m),
        alpha=np.full(m, 50 / 3600),
        gamma=np.full(m, 50 / 3600),
        ap_load=rng.uniform(0, 2000, m),
        srv_load=rng.uniform(0, 1e12, m),
        lf=lf + lf.T,
    )


def call(fn, mode, a):
    return fn(mode, 1 / 3600, 240.0, 2.4e11, 30.0, a["covered"], a["u"], a["cap"], a["v"],
              a["mem"], a["bw"], a["cpu"], a["alpha"], a["gamma"], a["ap_load"],
              a["srv_load"], a["lf"])


def bench(fn, inputs, mode):
    t0 = time.perf_counter()
    for a in inputs:
        call(fn, mode, a)
    return (time.perf_counter() - t0) / len(inputs)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 32, 128, 512])
    ap.add_argument("--calls", type=int, default=200)
    args = ap.parse_args()
    compiled = kernels.compiled_best_pair()
    if compiled is None:
        print("compiled kernel not built; only the Python kernel is timed")
    rng = np.random.default_rng(0)
    print(f"{'M':>5} {'python us/call':>15} {'compiled us/call':>17} {'speedup':>8}")
    for m in args.sizes:
        calls = max(5, args.calls if m <= 128 else args.calls // 10)
        inputs = [random_inputs(m, rng) for _ in range(calls)]
        for a in inputs:
            if compiled is not None:
                assert call(compiled, kernels.DAPA, a) == call(kernels.python_best_pair, kernels.DAPA, a)
        py = bench(kernels.python_best_pair, inputs, kernels.DAPA) * 1e6
        if compiled is None:
            print(f"{m:5d} {py:15.1f} {'-':>17} {'-':>8}")
            continue
        cc = bench(compiled, inputs, kernels.DAPA) * 1e6
        print(f"{m:5d} {py:15.1f} {cc:17.1f} {py / cc:8.1f}x")


if __name__ == "__main__":
    main()
