"""Random locally bounded injection patterns for property tests and benchmarks.

Packets are proposed round by round and each one is kept only if every
interval ending at the current round still satisfies the local bound, so the
output is locally ``(rho, sigma, beta)``-bounded by construction.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .injection import BoundParams, InjectionPattern, PacketSpec
from .topology import Route


def random_bounded_pattern(n: int, horizon: int, params: BoundParams, rng: np.random.Generator,
                           sizes=None, activity: float = 0.5, burst: float = 0.2) -> InjectionPattern:
    """Draw a pattern that is locally bounded under ``params``.

    ``sizes`` is an optional list of packet sizes to draw from (weighted
    bound); unit packets otherwise.  ``activity`` is the chance a round
    proposes anything, ``burst`` the chance a proposal is a block burst.
    """
    sizes = [Fraction(1)] if sizes is None else [Fraction(s) for s in sizes]
    beta = params.beta_vector(n)
    scale = math.lcm(*(v.denominator for v in [params.rho, params.sigma, *beta, *sizes]))
    rho = int(params.rho * scale)
    sigma = int(params.sigma * scale)
    beta_s = np.array([int(b * scale) for b in beta], dtype=np.int64)
    size_s = [int(s * scale) for s in sizes]

    # suffix[r, f]: weight from origin f over rounds r..t; slack[r]: room left on [r, t]
    suffix = np.zeros((horizon + 1, n), dtype=np.int64)
    slack = np.zeros(horizon + 1, dtype=np.int64)
    items = []
    for t in range(horizon + 1):
        slack[:t] += rho
        slack[t] = rho + sigma
        if rng.random() >= activity:
            continue
        if rng.random() < burst:
            a = int(rng.integers(1, n + 1))
            b = int(rng.integers(a, n + 1))
            proposal = [o for o in range(a, b + 1) for _ in range(int(rng.integers(1, 4)))]
        else:
            k = int(rng.integers(1, 4))
            proposal = [int(o) for o in rng.integers(1, n + 1, size=k)]
        for origin in proposal:
            pick = int(rng.integers(len(sizes)))
            w = size_s[pick]
            col = suffix[:t + 1, origin - 1]
            over = col - beta_s[origin - 1]
            delta = np.maximum(over + w, 0) - np.maximum(over, 0)
            if np.all(delta <= slack[:t + 1]):
                col += w
                slack[:t + 1] -= delta
                items.append(PacketSpec(t, Route(origin), sizes[pick]))
    return InjectionPattern(horizon, tuple(items), n)


def random_params(rng: np.random.Generator, n: int, max_rho=1, max_sigma=4, max_beta=3,
                  uniform_beta: bool = False) -> BoundParams:
    rho = Fraction(int(rng.integers(1, 4)), int(rng.integers(1, 4))) if max_rho is None else Fraction(max_rho)
    sigma = int(rng.integers(0, max_sigma + 1))
    if uniform_beta:
        return BoundParams.uniform(rho, sigma, int(rng.integers(0, max_beta + 1)))
    beta = {i: int(rng.integers(0, max_beta + 1)) for i in range(1, n + 1)}
    return BoundParams(rho, sigma, beta)
