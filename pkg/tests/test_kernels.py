import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from aqtlab import kernels
from aqtlab.kernels import python_impl

compiled = pytest.mark.skipif(not kernels.COMPILED, reason="extension not built")


def naive_excess(rounds, W, beta, rho, threshold):
    """No pruning: every pair of injection rounds."""
    best, bi, bj = threshold, -1, -1
    K = len(rounds)
    for i in range(K):
        acc = np.zeros(len(beta), dtype=object)
        for j in range(i, K):
            acc = acc + np.asarray(W[j], dtype=object)
            F = sum(max(0, a - b) for a, b in zip(acc, beta)) - rho * (rounds[j] - rounds[i] + 1)
            if F > best:
                best, bi, bj = F, i, j
    return best, bi, bj


@st.composite
def scans(draw):
    n = draw(st.integers(1, 6))
    K = draw(st.integers(0, 10))
    gaps = draw(st.lists(st.integers(1, 4), min_size=K, max_size=K))
    rounds = np.cumsum(gaps).astype(np.int64) if K else np.zeros(0, dtype=np.int64)
    W = np.array(draw(st.lists(st.lists(st.integers(0, 9), min_size=n, max_size=n), min_size=K, max_size=K)),
                 dtype=np.int64).reshape(K, n)
    beta = np.array(draw(st.lists(st.integers(0, 6), min_size=n, max_size=n)), dtype=np.int64)
    return rounds, W, beta, draw(st.integers(0, 8)), draw(st.integers(0, 10))


@settings(max_examples=300)
@given(scans())
def test_python_scan_matches_naive(args):
    rounds, W, beta, rho, thr = args
    assert python_impl.max_local_excess(rounds, W, beta, rho, thr) == naive_excess(
        rounds.tolist(), W.tolist(), beta.tolist(), rho, thr)


@compiled
@settings(max_examples=300)
@given(scans())
def test_compiled_scan_matches_python(args):
    assert tuple(kernels.max_local_excess(*args)) == python_impl.max_local_excess(*args)


@compiled
@settings(max_examples=200)
@given(st.integers(1, 8), st.integers(1, 20), st.sampled_from([kernels.OED, kernels.GREEDY]),
       st.integers(1, 3), st.data())
def test_compiled_rounds_match_python(n, H, protocol, C, data):
    inj = np.array(data.draw(st.lists(st.lists(st.integers(0, 3), min_size=n, max_size=n),
                                      min_size=H, max_size=H)), dtype=np.int64)
    la, lb = np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)
    ha, hb = np.zeros((H, n), dtype=np.int64), np.zeros((H, n), dtype=np.int64)
    da = kernels.run_rounds(la, inj, protocol, C, ha)
    db = python_impl.run_rounds(lb, inj, protocol, C, hb)
    assert da == db and (ha == hb).all() and (la == lb).all()


def test_pure_switch():
    env = dict(os.environ, AQT_LAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from aqtlab import kernels; print(kernels.COMPILED)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"


def test_empty_scan():
    empty = np.zeros((0, 3), dtype=np.int64)
    res = kernels.max_local_excess(np.zeros(0, dtype=np.int64), empty, np.zeros(3, dtype=np.int64), 1, 0)
    assert tuple(res)[1:] == (-1, -1)


@compiled
def test_benchmark_quick(capsys):
    import importlib.util
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    assert mod.main(["--quick", "--repeat", "1"]) == 0
    assert capsys.readouterr().out.count("\n") == 5
