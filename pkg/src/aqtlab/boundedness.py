"""Deciding (rho, sigma)- and locally (rho, sigma, beta)-boundedness exactly.

The universal quantifier over origin sets ``S`` is removed with the extremal
set ``S* = {f : N_f^T(e) > beta(f)}``: the bound holds for every ``S`` iff it
holds for ``S*``, because each packet has exactly one origin.  On a path every
route ends at ``n+1``, so ``N_f^T(e)`` is the same for every ``e >= f`` and the
largest excess over edges is attained at ``e = max(S*)``.

Only intervals whose endpoints are injection rounds need examining: trimming
empty rounds off either end keeps every count and shrinks ``|T|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .injection import BoundParams, InjectionPattern, per_origin_utilization, to_q, utilization
from .topology import ValidationError


@dataclass(frozen=True)
class Witness:
    e: int
    T: tuple[int, int]
    S: frozenset
    lhs: Fraction
    rhs: Fraction

    def describe(self) -> str:
        S = sorted(self.S)
        shown = ",".join(map(str, S)) if len(S) <= 12 else f"{S[0]}..{S[-1]} ({len(S)} buffers)"
        return (f"e={self.e} T=[{self.T[0]},{self.T[1]}] S={{{shown}}} "
                f"lhs={self.lhs} > rhs={self.rhs}")


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: Witness | None = None

    def __bool__(self):
        return self.ok


def _weighted(A: InjectionPattern, weighted):
    return (not A.is_unit) if weighted is None else weighted


def _scan(A: InjectionPattern, rho, beta_vec, threshold, weighted: bool):
    """Run the interval kernel on an exact integer scaling of the inputs.

    Returns ``(best, T)`` with ``best`` a Fraction, ``T`` None when nothing
    exceeded ``threshold``.
    """
    rows = A.weight_by_round()
    rounds = list(rows)
    n = A.n
    values = [rho, threshold, *beta_vec]
    if weighted:
        values += [w for per in rows.values() for w in per.values()]
    scale = math.lcm(*(Fraction(v).denominator for v in values)) if values else 1

    if not weighted:
        counts = A.count_by_round()
        W = [[counts[t].get(f, 0) * scale for f in range(1, n + 1)] for t in rounds]
    else:
        W = [[int(rows[t].get(f, 0) * scale) for f in range(1, n + 1)] for t in rounds]
    beta_s = [int(b * scale) for b in beta_vec]
    rho_s = int(rho * scale)
    thr_s = int(threshold * scale)

    span = (rounds[-1] - rounds[0] + 1) if rounds else 0
    mags = [abs(x) for x in beta_s + [thr_s, rho_s * (span + 1)]]
    total = sum(sum(row) for row in W)
    if total + max(mags, default=0) < kernels.INT64_SAFE:
        impl = kernels
        args = (np.asarray(rounds, dtype=np.int64),
                np.asarray(W, dtype=np.int64).reshape(len(rounds), n),
                np.asarray(beta_s, dtype=np.int64), rho_s, thr_s)
    else:
        impl = kernels.python_impl
        args = (rounds, W, beta_s, rho_s, thr_s)
    best, i, j = impl.max_local_excess(*args)
    if i < 0:
        return Fraction(threshold), None
    return Fraction(int(best), scale), (rounds[i], rounds[j])


def _local_witness(A, params: BoundParams, T, weighted) -> Witness:
    per = per_origin_utilization(A, A.n, T, weighted)
    S = frozenset(f for f, v in per.items() if v > params.b(f))
    e = max(S)
    lhs = utilization(A, e, T, S, weighted)
    rhs = params.rho * (T[1] - T[0] + 1) + params.sigma + params.beta_sum(S)
    return Witness(e, T, S, lhs, rhs)


def check_rho_sigma(A: InjectionPattern, rho, sigma, weighted=None) -> Verdict:
    """Decide whether ``N^T(e) <= rho*|T| + sigma`` for every edge and interval."""
    rho, sigma = to_q(rho), to_q(sigma)
    weighted = _weighted(A, weighted)
    best, T = _scan(A, rho, [Fraction(0)] * A.n, sigma, weighted)
    if T is None:
        return Verdict(True)
    per = per_origin_utilization(A, A.n, T, weighted)
    e = max(f for f, v in per.items() if v > 0)
    S = frozenset(range(1, A.n + 1))
    return Verdict(False, Witness(e, T, S, utilization(A, e, T, None, weighted),
                                  rho * (T[1] - T[0] + 1) + sigma))


def min_sigma(A: InjectionPattern, rho, weighted=None) -> Fraction:
    rho = to_q(rho)
    best, _ = _scan(A, rho, [Fraction(0)] * A.n, Fraction(0), _weighted(A, weighted))
    return max(best, Fraction(0))


def check_local(A: InjectionPattern, params: BoundParams, weighted=None) -> Verdict:
    weighted = _weighted(A, weighted)
    _, T = _scan(A, params.rho, params.beta_vector(A.n), params.sigma, weighted)
    if T is None:
        return Verdict(True)
    return Verdict(False, _local_witness(A, params, T, weighted))


def min_global_burst(A: InjectionPattern, rho, beta, weighted=None) -> Fraction:
    """Smallest ``sigma`` making ``A`` locally ``(rho, sigma, beta)``-bounded.

    ``beta`` is a :class:`BoundParams` (its sigma ignored), a mapping, or a
    uniform number.
    """
    beta_vec = _beta_vector(beta, A.n)
    best, _ = _scan(A, to_q(rho), beta_vec, Fraction(0), _weighted(A, weighted))
    return max(best, Fraction(0))


def _beta_vector(beta, n):
    if isinstance(beta, BoundParams):
        return beta.beta_vector(n)
    if isinstance(beta, dict):
        return [to_q(beta.get(i, 0)) for i in range(1, n + 1)]
    return [to_q(beta)] * n


BRUTE_MAX_N = 12
BRUTE_MAX_H = 12


def check_local_bruteforce(A: InjectionPattern, params: BoundParams, weighted=None) -> Verdict:
    """Direct transcription of the definition: every edge, interval and origin subset."""
    if A.n > BRUTE_MAX_N or A.horizon > BRUTE_MAX_H:
        raise ValidationError(
            f"brute force limited to n <= {BRUTE_MAX_N}, H <= {BRUTE_MAX_H} "
            f"(got n={A.n}, H={A.horizon})")
    weighted = _weighted(A, weighted)
    n = A.n
    beta = params.beta_vector(n)
    beta_sum = [Fraction(0)] * (1 << n)
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        beta_sum[mask] = beta_sum[mask & (mask - 1)] + beta[low]
    for e in range(1, n + 1):
        for r in range(A.horizon + 1):
            for s in range(r, A.horizon + 1):
                # N_{{f}}^T(e) for each origin f, counted directly from the multiset
                v = [Fraction(0)] * n
                for p in A.items:
                    if r <= p.round <= s and p.route.contains(e):
                        v[p.origin - 1] += p.size if weighted else 1
                lhs = [Fraction(0)] * (1 << n)
                base = params.rho * (s - r + 1) + params.sigma
                for mask in range(1 << n):
                    if mask:
                        low = (mask & -mask).bit_length() - 1
                        lhs[mask] = lhs[mask & (mask - 1)] + v[low]
                    if lhs[mask] > base + beta_sum[mask]:
                        S = frozenset(f + 1 for f in range(n) if mask >> f & 1)
                        return Verdict(False, Witness(e, (r, s), S, lhs[mask], base + beta_sum[mask]))
    return Verdict(True)


def local_implies_global(params: BoundParams, n: int) -> tuple[Fraction, Fraction]:
    """``(rho, sigma + sum of beta over all n buffers)``: a (rho, sigma') bound implied by the local one."""
    return params.rho, params.sigma + params.beta_sum(range(1, n + 1))
