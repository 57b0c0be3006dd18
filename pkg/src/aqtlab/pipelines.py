"""Capacity-C forwarding by running OED on jumbo packets.

Three compositions: unit packets on capacity-C edges (C-reduction), continuous
flows (discretize the C-reduced family), and mixed-size packets (greedy
bundling).  Buffer usage is reported in original units: ``C`` per jumbo packet
held plus whatever still waits in the bundling reserve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .bundling import c_reduce_flows, c_reduce_pattern, hetero_bundle
from .engine import oed_proof_bound, run
from .flows import FlowFamily, discretize
from .injection import BoundParams, InjectionPattern
from .topology import PathTopology, ValidationError


@dataclass
class PipelineResult:
    jumbo: InjectionPattern
    jumbo_peak: int
    reserve_peak: Fraction
    usage_peak: Fraction
    bound: Fraction
    trace: object

    @property
    def within_bound(self) -> bool:
        return self.usage_peak <= self.bound


def _usage(trace, C: int, reserve_at) -> tuple[Fraction, Fraction]:
    reserve_peak, usage_peak = Fraction(0), Fraction(0)
    for t, L in enumerate(trace.loads):
        for i, jumbo in enumerate(L, start=1):
            held = reserve_at(t, i)
            reserve_peak = max(reserve_peak, held)
            usage_peak = max(usage_peak, C * jumbo + held)
    return reserve_peak, usage_peak


def _cumulative(A: InjectionPattern, weighted: bool):
    cum: dict[int, list] = {}
    for p in A.items:
        cum.setdefault(p.origin, []).append((p.round, p.size if weighted else 1))
    return cum


def _upto(events, t):
    return sum((w for r, w in events if r <= t), Fraction(0))


def general_capacity(A: InjectionPattern, params: BoundParams, C: int, protocol="oed",
                     horizon: int | None = None) -> PipelineResult:
    """OED on the C-reduction of a unit-packet pattern for capacity-``C`` edges."""
    H = A.horizon if horizon is None else horizon
    jumbo = c_reduce_pattern(A, C)
    trace = run(PathTopology(A.n), jumbo, protocol, H, record_events=False)
    cum = _cumulative(A, False)

    def reserve_at(t, i):
        total = _upto(cum.get(i, ()), t)
        return total - C * math.floor(total / C)

    reserve_peak, usage_peak = _usage(trace, C, reserve_at)
    k = Fraction(1, C)
    B = 1 + params.max_beta(A.n) * k
    bound = C * oed_proof_bound(max(A.n, 2), B, params.sigma * k) + C
    return PipelineResult(jumbo, trace.max_load(), reserve_peak, usage_peak, bound, trace)


def continuous(F: FlowFamily, C: int, horizon: int, protocol="oed") -> PipelineResult:
    """OED on the discretization of the C-reduced flow family."""
    reduced = c_reduce_flows(F, C)
    jumbo = discretize(reduced, horizon)
    trace = run(PathTopology(F.n), jumbo, protocol, horizon, record_events=False)
    by_origin: dict[int, list] = {}
    for f in reduced.flows:
        by_origin.setdefault(f.origin, []).append(f.curve)

    def reserve_at(t, i):
        return sum((C * (c(t) - math.floor(c(t))) for c in by_origin.get(i, ())), Fraction(0))

    reserve_peak, usage_peak = _usage(trace, C, reserve_at)
    beta = {}
    for f in reduced.flows:
        beta[f.origin] = beta.get(f.origin, Fraction(0)) + 1 + f.b
    B = max(beta.values(), default=Fraction(0))
    bound = C * oed_proof_bound(max(F.n, 2), B, reduced.sigma) + C * max(
        (len(v) for v in by_origin.values()), default=1)
    return PipelineResult(jumbo, trace.max_load(), reserve_peak, usage_peak, bound, trace)


def heterogeneous(A: InjectionPattern, params: BoundParams, C: int, protocol="oed",
                  horizon: int | None = None) -> PipelineResult:
    """OED on greedy bundles (weight in ``[C/2, C]``) forwarded as unit jumbo packets.

    The bound uses bundle parameters ``(1, 2 sigma / C, 1 + 2 beta / C)``:
    each bundle carries at least ``C/2`` of injected weight.
    """
    if params.rho > Fraction(C, 2):
        raise ValidationError(f"rate {params.rho} exceeds C/2 = {Fraction(C, 2)}")
    H = A.horizon if horizon is None else horizon
    bundles, state = hetero_bundle(A, C)
    slots = bundles.unit_slots()
    trace = run(PathTopology(A.n), slots, protocol, H, record_events=False)
    injected = _cumulative(A, True)
    emitted = {}
    for b in state.bundles:
        emitted.setdefault(b.origin, []).append((b.round, b.weight))

    def reserve_at(t, i):
        return _upto(injected.get(i, ()), t) - _upto(emitted.get(i, ()), t)

    reserve_peak, usage_peak = _usage(trace, C, reserve_at)
    k = Fraction(2, C)
    B = 1 + params.max_beta(A.n) * k
    bound = C * oed_proof_bound(max(A.n, 2), B, params.sigma * k) + Fraction(C, 2)
    return PipelineResult(bundles, trace.max_load(), reserve_peak, usage_peak, bound, trace)
