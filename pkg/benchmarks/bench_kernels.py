"""Compiled kernels against their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each workload runs on both implementations, the results are compared, and
the best-of-``repeat`` wall time is reported.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from aqtlab import kernels
from aqtlab.adversaries import oblivious_random
from aqtlab.engine import run
from aqtlab.generators import random_bounded_pattern
from aqtlab.injection import BoundParams
from aqtlab.topology import PathTopology


def scan_inputs(A):
    counts = A.count_by_round()
    rounds = np.asarray(list(counts), dtype=np.int64)
    W = np.zeros((len(rounds), A.n), dtype=np.int64)
    for k, t in enumerate(counts):
        for o, c in counts[t].items():
            W[k, o - 1] = c
    return rounds, W


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args(argv)
    if not kernels.COMPILED:
        print("compiled extension unavailable; only the Python kernels can run")
        return 1
    epochs = 100 if args.quick else 2000
    rng = np.random.default_rng(0)
    workloads = []

    a = oblivious_random(16, 1, 0, seed=1)
    A = run(PathTopology(16), a, "oed", a.horizon_for(epochs), record_events=False).meta["realized"]
    r, W = scan_inputs(A)
    beta = np.ones(16, dtype=np.int64)
    workloads.append((f"interval scan, random lb trace ({len(r)} injection rounds)",
                      lambda impl: impl.max_local_excess(r, W, beta, 1, 0)))

    n = 32 if args.quick else 64
    B = random_bounded_pattern(n, 40 * n, BoundParams.uniform(1, 4, 3), rng, activity=0.9, burst=0.5)
    r2, W2 = scan_inputs(B)
    beta2 = np.full(n, 3, dtype=np.int64)
    workloads.append((f"interval scan, dense bounded pattern (n={n}, {len(r2)} rounds)",
                      lambda impl: impl.max_local_excess(r2, W2, beta2, 1, 4)))

    H, n3 = (2000, 64) if args.quick else (20000, 128)
    inj = rng.integers(0, 2, size=(H, n3)).astype(np.int64) * (rng.random((H, n3)) < 0.01)
    for name, code in (("oed", kernels.OED), ("greedy", kernels.GREEDY)):
        def rounds(impl, code=code):
            loads = np.zeros(n3, dtype=np.int64)
            hist = np.zeros((H, n3), dtype=np.int64)
            delivered = impl.run_rounds(loads, inj, code, 1, hist)
            return delivered, hist.sum()
        workloads.append((f"forwarding, {name} (n={n3}, {H} rounds)", rounds))

    print(f"{'workload':58s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}")
    for label, fn in workloads:
        tc, rc = best_of(lambda: fn(kernels), args.repeat)
        tp, rp = best_of(lambda: fn(kernels.python_impl), args.repeat)
        if tuple(rc) != tuple(rp):
            raise SystemExit(f"{label}: results differ {rc} vs {rp}")
        print(f"{label:58s} {tc * 1e3:8.2f}ms {tp * 1e3:8.1f}ms {tp / tc:7.0f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
