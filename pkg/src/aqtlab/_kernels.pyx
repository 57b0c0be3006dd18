# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: interval excess scan and load-only forwarding."""
import numpy as np
cimport numpy as cnp

from libc.stdint cimport int64_t

cdef int64_t NEG_INF = -(1 << 62)

OED = 0
GREEDY = 1


def max_local_excess(int64_t[::1] rounds, int64_t[:, ::1] W, int64_t[::1] beta,
                     int64_t rho, int64_t threshold):
    """Return ``(best, i, j)`` maximising ``sum_f max(0, N_f - beta_f) - rho*|T|``.

    ``T`` ranges over ``[rounds[i], rounds[j]]``.  Only values strictly above
    ``threshold`` are recorded; ``i = j = -1`` when none is.
    """
    cdef Py_ssize_t K = W.shape[0]
    cdef Py_ssize_t n = W.shape[1]
    cdef Py_ssize_t i, j, f
    cdef int64_t best = threshold, F, ex, d
    cdef Py_ssize_t bi = -1, bj = -1
    if K == 0:
        return best, bi, bj
    cdef int64_t[::1] total = np.zeros(K, dtype=np.int64)
    cdef int64_t[::1] D = np.empty(K, dtype=np.int64)
    cdef int64_t[::1] acc = np.zeros(n, dtype=np.int64)
    for i in range(K):
        for f in range(n):
            total[i] += W[i, f]
    D[K - 1] = NEG_INF
    for i in range(K - 2, -1, -1):
        d = D[i + 1] if D[i + 1] > 0 else 0
        D[i] = total[i + 1] - rho * (rounds[i + 1] - rounds[i]) + d
    for i in range(K):
        for f in range(n):
            acc[f] = 0
        for j in range(i, K):
            ex = 0
            for f in range(n):
                acc[f] += W[j, f]
                if acc[f] > beta[f]:
                    ex += acc[f] - beta[f]
            F = ex - rho * (rounds[j] - rounds[i] + 1)
            if F > best:
                best = F
                bi = i
                bj = j
            if j == K - 1 or F + D[j] <= best:
                break
    return best, bi, bj


cdef inline bint _decide(int protocol, int64_t here, int64_t there):
    if protocol == 0:
        return here > there or (here == there and (here & 1) == 1)
    return here > 0


def run_rounds(int64_t[::1] loads, int64_t[:, ::1] inj, int protocol,
               int64_t capacity, int64_t[:, ::1] hist):
    """Advance ``loads`` through ``inj.shape[0]`` rounds in place.

    Row ``t`` of ``inj`` is added before forwarding; the post-injection
    snapshot goes to ``hist[t]``.  Returns packets delivered.
    """
    cdef Py_ssize_t R = inj.shape[0]
    cdef Py_ssize_t n = loads.shape[0]
    cdef Py_ssize_t t, i
    cdef int64_t delivered = 0, nxt
    cdef int64_t[::1] sent = np.zeros(n, dtype=np.int64)
    for t in range(R):
        for i in range(n):
            loads[i] += inj[t, i]
            hist[t, i] = loads[i]
        for i in range(n):
            nxt = loads[i + 1] if i + 1 < n else 0
            if loads[i] > 0 and _decide(protocol, loads[i], nxt):
                sent[i] = loads[i] if loads[i] < capacity else capacity
            else:
                sent[i] = 0
        for i in range(n):
            loads[i] -= sent[i]
            if i + 1 < n:
                loads[i + 1] += sent[i]
            else:
                delivered += sent[i]
    return delivered
