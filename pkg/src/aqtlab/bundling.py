"""Jumbo packets: C-reduction for unit packets, greedy bundling for mixed sizes."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .boundedness import Verdict, check_local
from .flows import FlowFamily, discretize, flows_from_pattern
from .injection import BoundParams, InjectionPattern, PacketSpec
from .topology import Route, ValidationError


def c_reduce_flows(F: FlowFamily, C: int) -> FlowFamily:
    """Scale every curve, rate and burst by ``1/C``."""
    if C < 1:
        raise ValidationError(f"capacity must be >= 1, got {C}")
    k = Fraction(1, C)
    return FlowFamily(tuple(f.scaled(k) for f in F.flows), F.r * k, F.sigma * k, F.n)


def c_reduce_pattern(A: InjectionPattern, C: int) -> InjectionPattern:
    """Jumbo-packet pattern: the discretization of the C-reduced flows of ``A``.

    Each jumbo packet stands for ``C`` original packets; leftovers wait in a
    per-buffer reserve.
    """
    if not A.is_unit:
        raise ValidationError("c_reduce_pattern needs unit packets; use hetero_bundle for mixed sizes")
    F = flows_from_pattern(A, BoundParams(0, 0))
    return discretize(c_reduce_flows(F, C), A.horizon)


def reduced_params(params: BoundParams, C: int) -> BoundParams:
    """``(rho/C, sigma/C, 1 + beta/C)``."""
    k = Fraction(1, C)
    return BoundParams(params.rho * k, params.sigma * k,
                       {i: 1 + b * k for i, b in params.beta.items()}, 1 + params.beta_default * k)


def verify_uniform_bundling(A: InjectionPattern, params: BoundParams, C: int) -> Verdict:
    """Check that the C-reduction of a locally bounded ``A`` meets the scaled bound."""
    pre = check_local(A, params)
    if not pre.ok:
        raise ValidationError(f"input pattern is not locally bounded: {pre.witness.describe()}")
    return check_local(c_reduce_pattern(A, C), reduced_params(params, C))


@dataclass
class Bundle:
    round: int
    origin: int
    weight: Fraction
    members: tuple  # indices into the source pattern's items


@dataclass
class BundleState:
    capacity: int
    reserve: dict = field(default_factory=dict)  # origin -> deque of (item index, size)
    bundles: list = field(default_factory=list)

    def reserve_weight(self, origin: int) -> Fraction:
        return sum((w for _, w in self.reserve.get(origin, ())), Fraction(0))

    @property
    def total_reserve(self) -> Fraction:
        return sum((self.reserve_weight(o) for o in self.reserve), Fraction(0))

    @property
    def emitted_weight(self) -> Fraction:
        return sum((b.weight for b in self.bundles), Fraction(0))


def _emit(state: BundleState, t: int, origin: int) -> None:
    queue: deque = state.reserve[origin]
    C = state.capacity
    half = Fraction(C, 2)
    while sum(w for _, w in queue) > half:
        picked, weight = [], Fraction(0)
        for idx, w in queue:
            if weight + w > C:
                # only possible for w > C/2: it travels alone, earlier packets stay queued
                picked, weight = [(idx, w)], w
                break
            picked.append((idx, w))
            weight += w
            if weight >= half:
                break
        for entry in picked:
            queue.remove(entry)
        state.bundles.append(Bundle(t, origin, weight, tuple(i for i, _ in picked)))


def hetero_bundle(A: InjectionPattern, C: int) -> tuple[InjectionPattern, BundleState]:
    """Bundle mixed-size packets into jumbo packets of weight in ``[C/2, C]``.

    Per buffer and round, injected packets join a FIFO reserve; while the
    reserve weighs strictly more than ``C/2`` a bundle is cut by taking
    packets in order until its weight reaches ``C/2``.  The returned pattern
    carries the bundle weights as sizes (use ``unit_slots()`` to forward them
    as unit jumbo packets).
    """
    if C < 1:
        raise ValidationError(f"capacity must be >= 1, got {C}")
    for p in A.items:
        if p.size > C:
            raise ValidationError(f"packet of size {p.size} can never cross an edge of capacity {C}")
    state = BundleState(C)
    by_round: dict[int, list] = {}
    for idx, p in enumerate(A.items):
        by_round.setdefault(p.round, []).append((idx, p))
    for t in sorted(by_round):
        touched = []
        for idx, p in by_round[t]:
            state.reserve.setdefault(p.origin, deque()).append((idx, p.size))
            if p.origin not in touched:
                touched.append(p.origin)
        for origin in sorted(touched):
            _emit(state, t, origin)
    out = InjectionPattern(
        A.horizon, tuple(PacketSpec(b.round, Route(b.origin), b.weight) for b in state.bundles), A.n
    )
    return out, state
