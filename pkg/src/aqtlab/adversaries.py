"""The example patterns, the wave-flow family and the two lower-bound adversaries.

Lower-bound schedule for ``n = (2B)**m``: phase ``k = 1..m`` starts by
injecting ``B`` packets into every buffer of ``I_k`` and lasts
``tau_k = |I_k| / 2`` rounds, with ``|I_1| = n`` and ``|I_{k+1}| = |I_k| / 2B``.
After phase ``m`` one final round picks a single buffer ``I_{m+1}`` and injects
``B + sigma`` packets into it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .flows import ArrivalCurve, Flow, FlowFamily
from .injection import BoundParams, InjectionPattern, PacketSpec
from .topology import Route, ValidationError


def example_A0(n: int, horizon: int) -> InjectionPattern:
    """``n`` packets into buffer 1 in rounds ``1, n+1, 2n+1, ...``."""
    _check_n(n)
    records = [(t, 1, n) for t in range(1, horizon + 1, n)]
    return InjectionPattern.from_counts(records, horizon, n)


def example_A1(n: int, horizon: int) -> InjectionPattern:
    """One packet into every buffer in rounds ``1, n+1, 2n+1, ...``."""
    _check_n(n)
    records = [(t, i, 1) for t in range(1, horizon + 1, n) for i in range(1, n + 1)]
    return InjectionPattern.from_counts(records, horizon, n)


def wave_flows(n: int) -> FlowFamily:
    """``n`` flows, flow ``i`` starting at buffer ``i`` with ``a(t) = t/n``; family (1, 0)."""
    _check_n(n)
    curve = ArrivalCurve.linear(Fraction(1, n))
    return FlowFamily(tuple(Flow(curve, Route(i), 0, Fraction(1, n)) for i in range(1, n + 1)),
                      1, 0, n)


def _check_n(n):
    if not isinstance(n, int) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")


def phase_count(n: int, B: int) -> int:
    """``m`` with ``n == (2B)**m``; raises unless ``m >= 1``."""
    if not isinstance(B, int) or B < 1:
        raise ValidationError(f"B must be a positive integer, got {B!r}")
    _check_n(n)
    m, size = 0, 1
    while size < n:
        size *= 2 * B
        m += 1
    if size != n or m < 1:
        raise ValidationError(f"n={n} is not a positive power of 2B={2 * B}")
    return m


@dataclass(frozen=True)
class Phase:
    k: int
    start: int
    tau: int
    size: int


def schedule(n: int, B: int, start: int = 0) -> list[Phase]:
    """Phases ``1..m`` plus the final single-buffer round (``tau = 0``)."""
    m = phase_count(n, B)
    out, t, size = [], start, n
    for k in range(1, m + 1):
        out.append(Phase(k, t, size // 2, size))
        t += size // 2
        size //= 2 * B
    out.append(Phase(m + 1, t, 0, 1))
    return out


def epoch_length(n: int, B: int, sigma: int) -> int:
    phases = schedule(n, B)
    return phases[-1].start + 1 + B * n + sigma


def _sigma_int(sigma) -> int:
    s = Fraction(sigma)
    if s < 0 or s.denominator != 1:
        raise ValidationError(f"sigma must be a non-negative integer packet count, got {sigma!r}")
    return int(s)


@dataclass
class PhaseRecord:
    k: int
    start: int
    interval: tuple  # (a, b), inclusive
    end_load: int | None = None  # L(I_k) when the phase ended

    @property
    def size(self) -> int:
        return self.interval[1] - self.interval[0] + 1


class LowerBoundAdversary:
    """Adaptive adversary: each new interval is the heaviest of ``2B`` equal blocks.

    Ties go to the lowest-index block.  Locally ``(1, sigma, B)``-bounded.
    """

    def __init__(self, n: int, B: int, sigma=0, start: int = 0):
        self.n, self.B, self.sigma = n, B, _sigma_int(sigma)
        self.m = phase_count(n, B)
        self.start = start
        self.phases = schedule(n, B, start)
        self._at = {p.start: p for p in self.phases}
        self.reset()

    @property
    def params(self) -> BoundParams:
        return BoundParams.uniform(1, self.sigma, self.B)

    @property
    def final_round(self) -> int:
        return self.phases[-1].start

    @property
    def horizon(self) -> int:
        return self.final_round

    def reset(self, seed=None):
        self.records: list[PhaseRecord] = []
        self.target: int | None = None

    def injections(self, t: int, loads) -> list[PacketSpec]:
        phase = self._at.get(t)
        if phase is None:
            return []
        if phase.k == 1:
            interval = (1, self.n)
        else:
            prev = self.records[-1]
            prev.end_load = sum(loads[prev.interval[0] - 1:prev.interval[1]])
            interval = heaviest_block(loads, prev.interval, 2 * self.B)
        self.records.append(PhaseRecord(phase.k, t, interval))
        count = self.B + (self.sigma if phase.k == self.m + 1 else 0)
        if phase.k == self.m + 1:
            self.target = interval[0]
        return [PacketSpec(t, Route(i)) for i in range(interval[0], interval[1] + 1)
                for _ in range(count)]

    def claim_floor(self, k: int, size: int) -> Fraction:
        """Guaranteed ``L(I_k)`` at the end of phase ``k``: ``k (B - 1/2) |I_k|``."""
        return k * (self.B - Fraction(1, 2)) * size

    def final_floor(self) -> Fraction:
        """Guaranteed target load in the final round: ``m (B - 1/2) + sigma``."""
        return self.m * (self.B - Fraction(1, 2)) + self.sigma


def heaviest_block(loads, interval, parts: int) -> tuple:
    a, b = interval
    width = (b - a + 1) // parts
    best, pick = None, None
    for j in range(parts):
        lo = a + j * width
        total = sum(loads[lo - 1:lo - 1 + width])
        if best is None or total > best:
            best, pick = total, (lo, lo + width - 1)
    return pick


def lower_bound_adaptive(n: int, B: int, sigma=0) -> LowerBoundAdversary:
    return LowerBoundAdversary(n, B, sigma)


def target_intervals(n: int, B: int, target: int) -> list[tuple]:
    """The nested intervals ``I_1 ⊇ ... ⊇ I_{m+1} = [target]`` leading to ``target``."""
    m = phase_count(n, B)
    out, a, size = [], 1, n
    for _ in range(m + 1):
        out.append((a, a + size - 1))
        if size > 1:
            size //= 2 * B
            a = a + ((target - a) // size) * size
    return out


def pattern_for_target(n: int, B: int, sigma, target: int, start: int = 0) -> InjectionPattern:
    """The fixed pattern whose nested intervals end at buffer ``target``."""
    sigma = _sigma_int(sigma)
    records = []
    for phase, (a, b) in zip(schedule(n, B, start), target_intervals(n, B, target)):
        count = B + (sigma if phase.tau == 0 else 0)
        records.extend((phase.start, i, count) for i in range(a, b + 1))
    return InjectionPattern.from_counts(records, schedule(n, B, start)[-1].start, n)


@dataclass
class EpochPlan:
    index: int
    start: int
    target: int
    phases: list  # [(k, start round, (a, b))]

    @property
    def final_round(self) -> int:
        return self.phases[-1][1]


class ObliviousRandomAdversary:
    """Repeats: pick a uniform target buffer, replay its fixed pattern, idle ``Bn + sigma`` rounds.

    The target of epoch ``e`` depends only on ``(seed, e)``.
    """

    def __init__(self, n: int, B: int, sigma=0, seed: int = 0, start: int = 0):
        self.n, self.B, self.sigma = n, B, _sigma_int(sigma)
        self.m = phase_count(n, B)
        self.seed = seed
        self.start = start
        self.length = epoch_length(n, B, self.sigma)
        self._cache: dict[int, tuple] = {}

    @property
    def params(self) -> BoundParams:
        return BoundParams.uniform(1, self.sigma, self.B)

    def reset(self, seed=None):
        if seed is not None and seed != self.seed:
            self.seed = seed
            self._cache.clear()

    def target(self, epoch: int) -> int:
        rng = np.random.default_rng([self.seed, epoch])
        return int(rng.integers(1, self.n + 1))

    def _epoch(self, e: int):
        if e not in self._cache:
            base = self.start + e * self.length
            A = pattern_for_target(self.n, self.B, self.sigma, self.target(e), base)
            self._cache = {e: (A, {})}
            for p in A.items:
                self._cache[e][1].setdefault(p.round, []).append(p)
        return self._cache[e]

    def injections(self, t: int, loads) -> list[PacketSpec]:
        if t < self.start:
            return []
        e = (t - self.start) // self.length
        return self._epoch(e)[1].get(t, [])

    def plan(self, horizon: int) -> list[EpochPlan]:
        """Epochs whose final injection round is at most ``horizon``."""
        out = []
        e = 0
        while True:
            base = self.start + e * self.length
            phases = schedule(self.n, self.B, base)
            if phases[-1].start > horizon:
                return out
            i = self.target(e)
            out.append(EpochPlan(e, base, i, [(p.k, p.start, iv) for p, iv in
                                              zip(phases, target_intervals(self.n, self.B, i))]))
            e += 1

    def horizon_for(self, epochs: int) -> int:
        return self.start + epochs * self.length - 1

    def final_floor(self) -> Fraction:
        return self.m * (self.B - Fraction(1, 2)) + self.sigma


def oblivious_random(n: int, B: int, sigma=0, seed: int = 0) -> ObliviousRandomAdversary:
    return ObliviousRandomAdversary(n, B, sigma, seed)


@dataclass
class EpochRecord:
    index: int
    target: int
    phase_good: list = field(default_factory=list)
    good: bool = False
    peak: int = 0
    floor_ok: bool = True


def classify_epochs(trace, adversary: ObliviousRandomAdversary) -> list[EpochRecord]:
    """Good-phase/good-epoch flags from the phase-start loads of a finished run.

    Phase ``j >= 2`` is good when, before its injection, the average load of
    ``I_j`` is at least that of ``I_{j-1}``.  ``peak`` is the target's load
    right after the final injection.
    """
    if trace.n != adversary.n:
        raise ValidationError(f"trace has n={trace.n}, adversary n={adversary.n}")
    realized = trace.meta.get("realized")
    if realized is None:
        raise ValidationError("trace carries no realized pattern")
    inj = realized.count_by_round()
    last = trace.rounds - 1
    records = []
    for plan in adversary.plan(last):
        flags = []
        for (k, s, iv), (_, _, prev) in zip(plan.phases[1:], plan.phases[:-1]):
            post = trace.loads[s]
            added = inj.get(s, {})
            pre = [post[i] - added.get(i + 1, 0) for i in range(trace.n)]
            cur_sum = sum(pre[iv[0] - 1:iv[1]])
            prev_sum = sum(pre[prev[0] - 1:prev[1]])
            cur_len = iv[1] - iv[0] + 1
            prev_len = prev[1] - prev[0] + 1
            flags.append(cur_sum * prev_len >= prev_sum * cur_len)
        expected = {(p.origin, p.round) for p in realized.items
                    if plan.start <= p.round <= plan.final_round}
        planned = {(i, s) for _, s, (a, b) in plan.phases for i in range(a, b + 1)}
        if expected != planned:
            raise ValidationError(f"epoch {plan.index}: trace injections do not match the adversary plan")
        peak = trace.loads[plan.final_round][plan.target - 1]
        good = all(flags)
        rec = EpochRecord(plan.index, plan.target, flags, good, peak)
        rec.floor_ok = (not good) or peak >= adversary.final_floor()
        records.append(rec)
    return records
